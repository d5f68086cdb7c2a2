"""
Symmetric tensor algebra for the constitutive model.

Tensors are stored in Voigt order with off-diagonal entries kept unscaled:
``(xx, yy, xy)`` for n=2 and ``(xx, yy, zz, yz, xz, xy)`` for n=3. Every inner
product weights the off-diagonal slots by 2, so ``a.inner(b)`` equals the
Frobenius product of the full matrices. A single ``SymTensor`` holds a whole
batch (one tensor per element); the component axis is always the last one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

VOIGT_PAIRS: Dict[int, Tuple[Tuple[int, int], ...]] = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)),
}

COMPONENT_NAMES: Dict[int, Tuple[str, ...]] = {
    2: ("xx", "yy", "xy"),
    3: ("xx", "yy", "zz", "yz", "xz", "xy"),
}

Scalar = Union[float, NDArray[np.float64]]


def _check_dim(dim: int) -> int:
    if dim not in VOIGT_PAIRS:
        raise ValueError(f"tensor dimension must be 2 or 3, got {dim}")
    return int(dim)


def n_components(dim: int) -> int:
    """Number of independent entries of a symmetric dim x dim tensor."""
    return len(VOIGT_PAIRS[_check_dim(dim)])


def voigt_weights(dim: int) -> NDArray[np.float64]:
    """Inner-product weights: 1 on the diagonal slots, 2 on the off-diagonal ones."""
    return np.array([1.0 if i == j else 2.0 for i, j in VOIGT_PAIRS[_check_dim(dim)]])


def identity_components(dim: int) -> NDArray[np.float64]:
    return np.array([1.0 if i == j else 0.0 for i, j in VOIGT_PAIRS[_check_dim(dim)]])


@dataclass(frozen=True, eq=False)
class SymTensor:
    """A batch of symmetric tensors of shape ``(..., m)`` with m = dim(dim+1)/2."""

    dim: int
    components: NDArray[np.float64]

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim == 0 or comps.shape[-1] != n_components(self.dim):
            raise ValueError(
                f"expected trailing axis of length {n_components(self.dim)} "
                f"for dim={self.dim}, got shape {comps.shape}"
            )
        object.__setattr__(self, "components", comps)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_matrix(cls, matrix: ArrayLike, atol: float = 0.0) -> "SymTensor":
        """Build from full matrices of shape ``(..., n, n)``; asymmetry is rejected."""
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim < 2 or mat.shape[-1] != mat.shape[-2]:
            raise ValueError(f"expected (..., n, n) matrices, got shape {mat.shape}")
        dim = _check_dim(mat.shape[-1])
        skew = np.abs(mat - np.swapaxes(mat, -1, -2))
        if skew.size and float(skew.max()) > atol:
            raise ValueError("matrix is not symmetric")
        comps = np.stack([mat[..., i, j] for i, j in VOIGT_PAIRS[dim]], axis=-1)
        return cls(dim, comps)

    @classmethod
    def zeros(cls, dim: int, shape: Tuple[int, ...] = ()) -> "SymTensor":
        return cls(dim, np.zeros(tuple(shape) + (n_components(dim),)))

    @classmethod
    def identity(cls, dim: int, shape: Tuple[int, ...] = ()) -> "SymTensor":
        comps = np.broadcast_to(identity_components(dim), tuple(shape) + (n_components(dim),))
        return cls(dim, comps.copy())

    def to_matrix(self) -> NDArray[np.float64]:
        mat = np.zeros(self.batch_shape + (self.dim, self.dim))
        for slot, (i, j) in enumerate(VOIGT_PAIRS[self.dim]):
            mat[..., i, j] = self.components[..., slot]
            mat[..., j, i] = self.components[..., slot]
        return mat

    # -- shape --------------------------------------------------------------

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return tuple(self.components.shape[:-1])

    def __len__(self) -> int:
        if not self.batch_shape:
            raise TypeError("a single SymTensor has no length")
        return self.batch_shape[0]

    def __getitem__(self, index: Any) -> "SymTensor":
        return SymTensor(self.dim, self.components[index])

    # -- invariants ---------------------------------------------------------

    def trace(self) -> NDArray[np.float64]:
        return self.components[..., : self.dim].sum(axis=-1)

    def mean(self) -> NDArray[np.float64]:
        return self.trace() / self.dim

    def deviator(self) -> "SymTensor":
        comps = self.components.copy()
        comps[..., : self.dim] -= self.mean()[..., None]
        return SymTensor(self.dim, comps)

    def inner(self, other: "SymTensor") -> NDArray[np.float64]:
        self._check_same_dim(other)
        return np.sum(voigt_weights(self.dim) * self.components * other.components, axis=-1)

    def norm(self) -> NDArray[np.float64]:
        return np.sqrt(np.maximum(self.inner(self), 0.0))

    # -- arithmetic ---------------------------------------------------------

    def _check_same_dim(self, other: "SymTensor") -> None:
        if not isinstance(other, SymTensor):
            raise TypeError(f"expected SymTensor, got {type(other).__name__}")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_same_dim(other)
        return SymTensor(self.dim, self.components + other.components)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check_same_dim(other)
        return SymTensor(self.dim, self.components - other.components)

    def __neg__(self) -> "SymTensor":
        return SymTensor(self.dim, -self.components)

    def __mul__(self, factor: ArrayLike) -> "SymTensor":
        scale = np.asarray(factor, dtype=float)
        return SymTensor(self.dim, scale[..., None] * self.components)

    __rmul__ = __mul__

    def __truediv__(self, factor: ArrayLike) -> "SymTensor":
        scale = np.asarray(factor, dtype=float)
        return SymTensor(self.dim, self.components / scale[..., None])

    def __repr__(self) -> str:
        return f"SymTensor(dim={self.dim}, batch_shape={self.batch_shape})"


def split(xi: SymTensor) -> Tuple[NDArray[np.float64], SymTensor]:
    """Return ``(mean, dev)`` with ``xi = mean*Id + dev`` and ``tr(dev) = 0``."""
    return xi.mean(), xi.deviator()


@dataclass(frozen=True)
class HookeParams:
    """Isotropic Hooke law ``C e = lam*tr(e)*Id + 2*mu*e`` in dimension ``dim``."""

    lam: float
    mu: float
    dim: int = 3

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.lam + 2.0 * self.mu / self.dim > 0:
            raise ValueError(
                f"lambda + 2*mu/n must be > 0, got lambda={self.lam}, mu={self.mu}"
            )

    @property
    def bulk(self) -> float:
        """Modulus acting on the mean part: ``(C xi)_m = bulk * xi_m``."""
        return self.dim * self.lam + 2.0 * self.mu

    @property
    def gamma1(self) -> float:
        return min(2.0 * self.mu, self.bulk)

    @property
    def gamma2(self) -> float:
        return max(2.0 * self.mu, self.bulk)

    def apply(self, e: SymTensor) -> SymTensor:
        if e.dim != self.dim:
            raise ValueError(f"strain has dim {e.dim}, model has dim {self.dim}")
        comps = 2.0 * self.mu * e.components
        comps[..., : self.dim] += self.lam * e.trace()[..., None]
        return SymTensor(self.dim, comps)

    def energy_density(self, e: SymTensor) -> NDArray[np.float64]:
        return 0.5 * self.apply(e).inner(e)

    def matrix(self) -> NDArray[np.float64]:
        """Component-space matrix D with ``(C e).components = D @ e.components``."""
        d = identity_components(self.dim)
        return self.lam * np.outer(d, d) + 2.0 * self.mu * np.eye(n_components(self.dim))


def hooke_apply(e: SymTensor, h: HookeParams) -> SymTensor:
    return h.apply(e)
