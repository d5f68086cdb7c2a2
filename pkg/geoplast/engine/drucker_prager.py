"""
Drucker-Prager constraint set, support function and return mapping.

K = {sigma : tau*sigma_m + |sigma_D| - k <= 0}. Its support function is finite
only on the dilatancy cone dom H = {xi : tau*|xi_D| <= tr xi}, where it equals
(k/tau)*tr xi. Domain membership is always tested through ``in_domain``; the
value outside the cone is ``math.inf`` so that dom H violations never hide
behind NaN propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from geoplast.engine.tensors import (
    HookeParams,
    SymTensor,
    identity_components,
    n_components,
    voigt_weights,
)
from geoplast.models.errors import DiagnosticError, SolverError
from geoplast.models.models import REGIME_BY_CODE, Regime
from geoplast.utils.logger_config import get_logger

logger = get_logger("drucker_prager")

DOMAIN_RTOL = 1e-10
ELASTIC_RTOL = 1e-14
RESIDUAL_RTOL = 1e-12
CERTIFICATE_ATOL = 1e-8

ELASTIC, CONE_INTERIOR, CONE_BOUNDARY = 0, 1, 2


@dataclass(frozen=True)
class DruckerPrager:
    tau: float
    k: float
    dim: int = 3
    r_h: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        n_components(self.dim)
        slope = math.sqrt(self.tau**2 / self.dim + 1.0)
        r_h = self.k / slope
        # The maximizer of tau*s_m + |s_D| on the unit sphere, scaled by r_h,
        # must sit on the yield surface.
        unit_dev = np.zeros(n_components(self.dim))
        unit_dev[0], unit_dev[1] = 1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)
        on_surface = SymTensor(
            self.dim,
            r_h * (self.tau / (self.dim * slope) * identity_components(self.dim) + unit_dev / slope),
        )
        if abs(float(self.yield_value(on_surface))) > 1e-12 * self.k:
            raise DiagnosticError(f"inradius cross-check failed for tau={self.tau}, k={self.k}")
        object.__setattr__(self, "r_h", r_h)

    @property
    def apex(self) -> float:
        """Mean stress of the cone apex, ``k/tau``."""
        return self.k / self.tau

    def yield_value(self, sigma: SymTensor) -> NDArray[np.float64]:
        self._check(sigma)
        return self.tau * sigma.mean() + sigma.deviator().norm() - self.k

    def in_domain(
        self, xi: SymTensor, rtol: float = DOMAIN_RTOL, atol: ArrayLike = 0.0
    ) -> NDArray[np.bool_]:
        self._check(xi)
        return self.tau * xi.deviator().norm() <= xi.trace() + rtol * xi.norm() + atol

    def support(self, xi: SymTensor, atol: ArrayLike = 0.0) -> NDArray[np.float64]:
        value = self.apex * xi.trace()
        return np.where(self.in_domain(xi, atol=atol), value, math.inf)

    def project(self, sigma: SymTensor) -> SymTensor:
        """Nearest point of K in the Frobenius metric."""
        self._check(sigma)
        n = self.dim
        mean, dev = sigma.mean(), sigma.deviator()
        dev_norm = dev.norm()
        f = self.tau * mean + dev_norm - self.k
        a2 = self.tau**2 / n
        new_mean = mean - f * self.tau / (n * (1.0 + a2))
        new_norm = dev_norm - f / (1.0 + a2)
        to_apex = new_norm <= 0.0
        scale = np.where(dev_norm > 0.0, new_norm / np.where(dev_norm > 0.0, dev_norm, 1.0), 0.0)
        projected = dev * np.where(to_apex, 0.0, scale)
        comps = projected.components.copy()
        comps[..., :n] += np.where(to_apex, self.apex, new_mean)[..., None]
        outside = f > 0.0
        comps = np.where(outside[..., None], comps, sigma.components)
        return SymTensor(n, comps)

    def _check(self, t: SymTensor) -> None:
        if t.dim != self.dim:
            raise ValueError(f"tensor has dim {t.dim}, yield surface has dim {self.dim}")


def yield_value(sigma: SymTensor, dp: DruckerPrager) -> NDArray[np.float64]:
    return dp.yield_value(sigma)


def support_H(xi: SymTensor, dp: DruckerPrager) -> NDArray[np.float64]:
    return dp.support(xi)


def in_domain(xi: SymTensor, dp: DruckerPrager) -> NDArray[np.bool_]:
    return dp.in_domain(xi)


def inradius(dp: DruckerPrager) -> float:
    return dp.r_h


def project_to_K(sigma: SymTensor, dp: DruckerPrager) -> SymTensor:
    return dp.project(sigma)


def local_incremental_energy(
    q: SymTensor,
    eps: SymTensor,
    p_prev: SymTensor,
    c1: ArrayLike,
    h: HookeParams,
    dp: DruckerPrager,
) -> NDArray[np.float64]:
    """Pointwise incremental energy ``1/2 C(eps-q):(eps-q) + c1 q:q + H(q - p_prev)``."""
    e = eps - q
    smooth = h.energy_density(e) + np.asarray(c1, dtype=float) * q.inner(q)
    return smooth + dp.support(q - p_prev)


@dataclass
class LocalUpdateResult:
    p_new: SymTensor
    delta_p: SymTensor
    sigma: SymTensor
    eta: SymTensor
    dissipation: NDArray[np.float64]
    regime_codes: NDArray[np.int8]
    tangent: Optional[NDArray[np.float64]] = None

    @property
    def regime(self) -> Regime:
        """Regime of an unbatched update."""
        return REGIME_BY_CODE[int(np.asarray(self.regime_codes).reshape(-1)[0])]

    @property
    def regimes(self) -> List[Regime]:
        return [REGIME_BY_CODE[int(c)] for c in np.asarray(self.regime_codes).reshape(-1)]


def return_map(
    eps_trial: SymTensor,
    p_prev: SymTensor,
    c1: ArrayLike,
    h: HookeParams,
    dp: DruckerPrager,
    with_tangent: bool = False,
) -> LocalUpdateResult:
    """Exact minimizer of ``local_incremental_energy`` over q, batched.

    The shifted trial stress ``s = C(eps - p_prev) - 2 c1 p_prev`` selects the
    regime: elastic when ``s`` lies in K, cone interior when the minimizer
    sends the shifted stress to the apex, cone boundary otherwise. In the
    boundary regime the stationarity condition is linear in the magnitude of
    the deviatoric increment and is solved in closed form.
    """
    n = h.dim
    if eps_trial.dim != n or p_prev.dim != n or dp.dim != n:
        raise ValueError("eps_trial, p_prev, Hooke law and yield surface must share dim")
    c1 = np.broadcast_to(np.asarray(c1, dtype=float), eps_trial.batch_shape)
    if np.any(c1 < 0):
        raise ValueError("c1 must be >= 0")

    tau, k = dp.tau, dp.k
    a_m = h.bulk + 2.0 * c1
    a_d = 2.0 * h.mu + 2.0 * c1
    b = a_m * tau**2 / n + a_d

    s = h.apply(eps_trial - p_prev) - p_prev * (2.0 * c1)
    s_m, s_dev = s.mean(), s.deviator()
    s_dn = s_dev.norm()
    f = tau * s_m + s_dn - k
    scale = k + s.norm()

    elastic = f <= ELASTIC_RTOL * scale
    interior = ~elastic & (tau * s_dn / a_d <= n * (s_m - dp.apex) / a_m)
    boundary = ~elastic & ~interior

    safe_dn = np.where(s_dn > 0.0, s_dn, 1.0)
    nu = s_dev / safe_dn
    d = np.where(boundary, f / b, 0.0)

    delta_m = np.where(interior, (s_m - dp.apex) / a_m, np.where(boundary, tau * d / n, 0.0))
    dev_scale = np.where(interior, 1.0 / a_d, np.where(boundary, d / safe_dn, 0.0))
    delta_comps = (s_dev * dev_scale).components
    delta_comps[..., :n] += delta_m[..., None]
    delta = SymTensor(n, delta_comps)

    p_new = p_prev + delta
    sigma = h.apply(eps_trial - p_new)
    # eta = s - A delta, formed from s directly to avoid cancellation when c1 is large
    eta_comps = (s_dev * (1.0 - a_d * dev_scale)).components
    eta_comps[..., :n] += (s_m - a_m * delta_m)[..., None]
    eta = SymTensor(n, eta_comps)
    dissipation = dp.apex * n * delta_m

    if np.any(boundary):
        residual = np.abs(dp.yield_value(eta)) * boundary
        worst = float(np.max(residual / scale))
        if not worst <= RESIDUAL_RTOL:
            raise SolverError(
                "cone-boundary stationarity not met",
                residual=worst,
                iterations=1,
                stage="return_map",
            )

    codes = np.where(elastic, ELASTIC, np.where(interior, CONE_INTERIOR, CONE_BOUNDARY)).astype(np.int8)
    tangent = None
    if with_tangent:
        tangent = _algorithmic_tangent(h, tau, c1, a_m, a_d, b, d, nu, safe_dn, codes)
    return LocalUpdateResult(
        p_new=p_new,
        delta_p=delta,
        sigma=sigma,
        eta=eta,
        dissipation=dissipation,
        regime_codes=codes,
        tangent=tangent,
    )


def _algorithmic_tangent(
    h: HookeParams,
    tau: float,
    c1: NDArray[np.float64],
    a_m: NDArray[np.float64],
    a_d: NDArray[np.float64],
    b: NDArray[np.float64],
    d: NDArray[np.float64],
    nu: SymTensor,
    s_dn: NDArray[np.float64],
    codes: NDArray[np.int8],
) -> NDArray[np.float64]:
    """d sigma / d eps as component-space matrices, shape ``batch + (m, m)``."""
    n = h.dim
    m = n_components(n)
    ident = identity_components(n)
    w = voigt_weights(n)
    c_mat = h.matrix()
    p_mean = np.outer(ident, ident) / n
    p_dev = np.eye(m) - p_mean

    batch = codes.shape
    tangent = np.broadcast_to(c_mat, batch + (m, m)).copy()

    interior = codes == CONE_INTERIOR
    if np.any(interior):
        km = (h.bulk * 2.0 * c1 / a_m)[..., None, None]
        kd = (2.0 * h.mu * 2.0 * c1 / a_d)[..., None, None]
        tangent = np.where(interior[..., None, None], km * p_mean + kd * p_dev, tangent)

    boundary = codes == CONE_BOUNDARY
    if np.any(boundary):
        nu_c = nu.components
        wnu = w * nu_c
        g = (tau / n * ident + wnu) / b[..., None]
        direction = tau / n * ident + nu_c
        dnu = (p_dev - np.einsum("...i,...j->...ij", nu_c, wnu)) / s_dn[..., None, None]
        dd = np.einsum("...i,...j->...ij", direction, g) + d[..., None, None] * dnu
        # d delta = dd @ C d eps, hence d sigma = (C - C dd C) d eps
        plastic = c_mat - c_mat @ dd @ c_mat
        tangent = np.where(boundary[..., None, None], plastic, tangent)
    return tangent


def kkt_residuals(
    delta: SymTensor, eta: SymTensor, dp: DruckerPrager
) -> "tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]":
    """Per-point flow, yield and cone residuals of a plastic increment.

    flow  = |H(delta) - eta:delta| with H in its closed form,
    yield = positive part of yield_value(eta),
    cone  = positive part of tau*|delta_D| - tr(delta).
    """
    tr = delta.trace()
    flow = np.abs(dp.apex * tr - eta.inner(delta))
    yld = np.maximum(dp.yield_value(eta), 0.0)
    cone = np.maximum(dp.tau * delta.deviator().norm() - tr, 0.0)
    return flow, yld, cone
