"""
Damage constitutive laws and the damage block of the incremental problem.

Convention: alpha = 1 is the sound material, alpha = 0 full damage, and alpha
never increases in time. The hardening modulus c1(alpha) = c_bar*a/(1 - a),
a = min(alpha, alpha_cap), blows up toward the sound state; the dissipation
density d(alpha) = w_d*(1 - alpha) + d_shift is linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from geoplast.models.errors import SolverError
from geoplast.utils.logger_config import get_logger

logger = get_logger("damage")

ARMIJO = 1e-4
MAX_BACKTRACKS = 60
BB_STEP_MIN = 1e-12
BB_STEP_MAX = 1e12
ROUNDOFF = 8 * np.finfo(float).eps

DamageField = NDArray[np.float64]


@dataclass(frozen=True)
class DamageLaw:
    c_bar: float
    w_d: float
    w_grad: float = 0.0
    alpha_cap: float = 1.0 - 1e-6
    d_shift: float = 0.0

    def __post_init__(self) -> None:
        if not self.c_bar > 0:
            raise ValueError(f"c_bar must be > 0, got {self.c_bar}")
        if not self.w_d >= 0:
            raise ValueError(f"w_d must be >= 0, got {self.w_d}")
        if not self.w_grad >= 0:
            raise ValueError(f"w_grad must be >= 0, got {self.w_grad}")
        if not 0.0 < self.alpha_cap < 1.0:
            raise ValueError(f"alpha_cap must lie in (0, 1), got {self.alpha_cap}")

    def c1(self, alpha: ArrayLike) -> NDArray[np.float64]:
        a = np.minimum(_in_unit_interval(alpha), self.alpha_cap)
        return self.c_bar * a / (1.0 - a)

    def c1_prime(self, alpha: ArrayLike) -> NDArray[np.float64]:
        # Left derivative at the cap, zero strictly beyond it.
        a = _in_unit_interval(alpha)
        capped = np.minimum(a, self.alpha_cap)
        return np.where(a <= self.alpha_cap, self.c_bar / (1.0 - capped) ** 2, 0.0)

    def density(self, alpha: ArrayLike) -> NDArray[np.float64]:
        return self.w_d * (1.0 - _in_unit_interval(alpha)) + self.d_shift

    def density_prime(self, alpha: ArrayLike) -> NDArray[np.float64]:
        return np.full(np.shape(alpha), -self.w_d)

    @property
    def scale(self) -> float:
        """Energy density scale used to nondimensionalize damage residuals."""
        return self.w_d if self.w_d > 0 else self.c_bar


def _in_unit_interval(alpha: ArrayLike) -> NDArray[np.float64]:
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0) or np.any(a > 1.0) or np.any(~np.isfinite(a)):
        raise ValueError("damage values must lie in [0, 1]")
    return a


def c1_eval(alpha: ArrayLike, law: DamageLaw) -> NDArray[np.float64]:
    return law.c1(alpha)


def c1_deriv(alpha: ArrayLike, law: DamageLaw) -> NDArray[np.float64]:
    return law.c1_prime(alpha)


def dissipation_density(alpha: ArrayLike, law: DamageLaw) -> NDArray[np.float64]:
    return law.density(alpha)


def check_damage_field(alpha: ArrayLike, n_vertices: int) -> DamageField:
    values = np.asarray(alpha, dtype=float)
    if values.shape != (n_vertices,):
        raise ValueError(f"damage field must have shape ({n_vertices},), got {values.shape}")
    _in_unit_interval(values)
    return values


def dissipation(alpha: DamageField, mesh: Any, law: DamageLaw) -> float:
    """D(alpha) = integral of d(alpha); exact for P1 alpha since d is affine."""
    return float(mesh.volumes @ law.density(mesh.averaging @ alpha))


class DamageFunctional:
    """J(alpha) = int d(alpha) + w_grad |grad alpha|^2 + int c1(alpha) |p|^2.

    ``p_squared`` holds |p|^2 per element; alpha is nodal and enters the
    element terms through its element average.
    """

    def __init__(self, mesh: Any, law: DamageLaw, p_squared: ArrayLike) -> None:
        self.mesh = mesh
        self.law = law
        self.p_squared = np.asarray(p_squared, dtype=float)
        if self.p_squared.shape != mesh.volumes.shape:
            raise ValueError("p_squared must hold one value per element")

    def energy(self, alpha: DamageField) -> float:
        avg = self.mesh.averaging @ alpha
        local = self.law.density(avg) + self.law.c1(avg) * self.p_squared
        return float(self.mesh.volumes @ local + self.law.w_grad * alpha @ (self.mesh.laplacian @ alpha))

    def gradient(self, alpha: DamageField) -> NDArray[np.float64]:
        avg = self.mesh.averaging @ alpha
        local = self.law.density_prime(avg) + self.law.c1_prime(avg) * self.p_squared
        return self.mesh.averaging.T @ (self.mesh.volumes * local) + 2.0 * self.law.w_grad * (
            self.mesh.laplacian @ alpha
        )

    def residual(self, alpha: DamageField, upper: DamageField, grad: Optional[NDArray[np.float64]] = None) -> float:
        """Scaled projected-gradient residual on the box [0, upper]."""
        g = self.gradient(alpha) if grad is None else grad
        metric = self.law.scale * self.mesh.node_measure
        return float(np.max(np.abs(alpha - np.clip(alpha - g / metric, 0.0, upper)), initial=0.0))


@dataclass
class AlphaStepResult:
    alpha: DamageField
    iterations: int
    residual: float
    energy: float


def alpha_step(
    alpha_prev: DamageField,
    p_squared: ArrayLike,
    mesh: Any,
    law: DamageLaw,
    tol: float = 1e-10,
    max_iters: int = 5000,
    alpha_start: Optional[DamageField] = None,
) -> AlphaStepResult:
    """Minimize the damage functional over 0 <= alpha <= alpha_prev (nodewise).

    Projected gradient in the lumped-mass metric with Barzilai-Borwein steps
    and monotone Armijo backtracking along the projection arc.
    """
    upper = np.asarray(alpha_prev, dtype=float)
    functional = DamageFunctional(mesh, law, p_squared)
    metric = law.scale * mesh.node_measure

    start = upper if alpha_start is None else np.asarray(alpha_start, dtype=float)
    alpha = np.clip(start, 0.0, upper)
    energy = functional.energy(alpha)
    grad = functional.gradient(alpha)
    residual = functional.residual(alpha, upper, grad)
    step = 1.0

    for iteration in range(1, max_iters + 1):
        if residual <= tol:
            return AlphaStepResult(alpha, iteration - 1, residual, energy)

        lam = step
        roundoff = ROUNDOFF * (abs(energy) + 1.0)
        for _ in range(MAX_BACKTRACKS):
            trial = np.clip(alpha - lam * grad / metric, 0.0, upper)
            trial_energy = functional.energy(trial)
            if trial_energy <= energy + ARMIJO * float(grad @ (trial - alpha)) + roundoff:
                break
            lam *= 0.5
        else:
            logger.warning(f"alpha line search stalled at residual {residual:.3e}")
            raise SolverError(
                "damage line search failed", residual=residual, iterations=iteration, stage="alpha_step"
            )

        trial_grad = functional.gradient(trial)
        s = trial - alpha
        y = trial_grad - grad
        sy = float(s @ y)
        step = float(np.clip((s * metric) @ s / sy, BB_STEP_MIN, BB_STEP_MAX)) if sy > 0 else BB_STEP_MAX

        alpha, energy, grad = trial, trial_energy, trial_grad
        residual = functional.residual(alpha, upper, grad)

    if residual <= tol:
        return AlphaStepResult(alpha, max_iters, residual, energy)
    raise SolverError(
        "damage subproblem did not converge", residual=residual, iterations=max_iters, stage="alpha_step"
    )


def alpha_point_closed_form(p_norm: float, alpha_prev: float, law: DamageLaw) -> float:
    """Minimizer of the single-point damage problem without gradient term."""
    if law.w_d <= 0:
        return 0.0 if p_norm > 0 else alpha_prev
    return float(np.clip(1.0 - p_norm * np.sqrt(law.c_bar / law.w_d), 0.0, alpha_prev))
