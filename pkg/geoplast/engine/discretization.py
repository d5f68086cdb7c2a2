"""
Meshes, P1/P0 finite-element operators, boundary data and load assembly.

Three mesh kinds share one interface. Every kind exposes a sparse strain
operator ``B`` mapping the displacement unknowns to the stacked Voigt
components of the element strains, so the solvers never branch on the kind:

* ``point``   a single material point; the unknowns are the strain components
              themselves and each component is controlled either in strain
              (dirichlet) or in stress (neumann).
* ``segment`` a bar of ``n_elems`` P1 elements along x with homogeneous
              lateral strains (n-1 extra unknowns) controlled by the
              ``lateral`` tag; the two end points are the boundary facets.
* ``rect``    structured P1 triangles on [0, lx] x [0, ly] with sides
              ``left``, ``right``, ``bottom``, ``top`` (n = 2).

Dirichlet data is imposed strongly on nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike, NDArray

from geoplast.engine.tensors import (
    COMPONENT_NAMES,
    HookeParams,
    SymTensor,
    n_components,
    voigt_weights,
)
from geoplast.models.models import BoundaryKind, MeshKind
from geoplast.utils.logger_config import get_logger

logger = get_logger("discretization")

RECT_SIDES: Tuple[str, ...] = ("left", "right", "bottom", "top")
SEGMENT_ENDS: Tuple[str, ...] = ("left", "right")
LATERAL_TAG = "lateral"


# -- time tables --------------------------------------------------------------


class PiecewiseLinear:
    """Piecewise-linear table ``t -> value``; values may carry trailing axes.

    Outside the table range the end values are held.
    """

    def __init__(self, times: ArrayLike, values: ArrayLike) -> None:
        self.times = np.asarray(times, dtype=float).reshape(-1)
        self.values = np.asarray(values, dtype=float)
        if self.times.size == 0:
            raise ValueError("a time table needs at least one sample")
        if self.values.ndim == 0 or self.values.shape[0] != self.times.size:
            raise ValueError(
                f"table has {self.times.size} times but values of shape {self.values.shape}"
            )
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("table times must be strictly increasing")

    @classmethod
    def constant(cls, value: ArrayLike) -> "PiecewiseLinear":
        return cls([0.0], np.asarray(value, dtype=float)[None, ...])

    @property
    def value_shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape[1:])

    def __call__(self, t: float) -> NDArray[np.float64]:
        if self.times.size == 1:
            return self.values[0].copy()
        flat = self.values.reshape(self.times.size, -1)
        out = np.array([np.interp(t, self.times, flat[:, j]) for j in range(flat.shape[1])])
        return out.reshape(self.value_shape)

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def to_dict(self) -> Dict[str, Any]:
        return {"times": self.times.tolist(), "values": self.values.tolist()}


@dataclass
class BoundaryData:
    """Prescribed displacement ``w(t, x) = value(t) + gradient(t) @ x``."""

    value: PiecewiseLinear
    gradient: Optional[PiecewiseLinear] = None

    def at(self, t: float, coords: NDArray[np.float64]) -> NDArray[np.float64]:
        base = np.asarray(self.value(t), dtype=float)
        points = np.asarray(coords, dtype=float)
        out = np.broadcast_to(base, (points.shape[0],) + base.shape).copy()
        if self.gradient is not None:
            out = out + points @ np.asarray(self.gradient(t)).T
        return out


@dataclass
class LoadHistory:
    """Boundary displacements, tractions and body force, each tabulated in time."""

    dirichlet: Dict[str, BoundaryData] = field(default_factory=dict)
    traction: Dict[str, PiecewiseLinear] = field(default_factory=dict)
    body_force: Optional[PiecewiseLinear] = None

    def loads_constant(self) -> bool:
        tables = list(self.traction.values())
        if self.body_force is not None:
            tables.append(self.body_force)
        return all(table.is_constant() for table in tables)


@dataclass
class SafeLoadField:
    """Statically admissible stress ``rho(t)`` with safety margin ``tau0``.

    ``rho`` values have shape ``(T, m)`` (uniform in space) or ``(T, n_elements, m)``.
    """

    rho: PiecewiseLinear
    tau0: float

    def at(self, t: float, mesh: "Mesh") -> SymTensor:
        value = np.asarray(self.rho(t), dtype=float)
        comps = np.broadcast_to(value, (mesh.n_elements, mesh.n_components)).copy()
        return SymTensor(mesh.dim, comps)


# -- mesh ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mesh:
    kind: MeshKind
    dim: int
    vertices: NDArray[np.float64]
    elements: NDArray[np.int64]
    volumes: NDArray[np.float64]
    facets: NDArray[np.int64]
    facet_tags: Tuple[str, ...]
    boundary_kinds: Dict[str, BoundaryKind]
    strain_operator: sp.csr_matrix
    dof_tags: Dict[str, NDArray[np.int64]]
    averaging: sp.csr_matrix
    laplacian: sp.csr_matrix
    node_measure: NDArray[np.float64]
    dof_coords: NDArray[np.float64]

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.elements.shape[0])

    @property
    def n_components(self) -> int:
        return n_components(self.dim)

    @property
    def n_dofs(self) -> int:
        return int(self.strain_operator.shape[1])

    @property
    def measure(self) -> float:
        return float(self.volumes.sum())

    @property
    def diameter(self) -> float:
        if self.n_vertices < 2:
            return 1.0
        extent = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(extent))

    def tags_of_kind(self, kind: BoundaryKind) -> List[str]:
        return [tag for tag, k in self.boundary_kinds.items() if k == kind]

    @property
    def dirichlet_dofs(self) -> NDArray[np.int64]:
        dofs = [self.dof_tags[tag] for tag in self.tags_of_kind(BoundaryKind.DIRICHLET)]
        if not dofs:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(dofs))

    @property
    def dirichlet_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = True
        return mask

    @property
    def free_dofs(self) -> NDArray[np.int64]:
        return np.flatnonzero(~self.dirichlet_mask)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
            "volumes": self.volumes.tolist(),
        }


def _require_positive_int(spec: Dict[str, Any], key: str, errors: List[str]) -> int:
    value = spec.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        errors.append(f"mesh.{key}: must be a positive integer, got {value!r}")
        return 0
    return value


def _require_positive_float(spec: Dict[str, Any], key: str, errors: List[str]) -> float:
    value = spec.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        errors.append(f"mesh.{key}: must be > 0, got {value!r}")
        return 0.0
    return float(value)


def _boundary_kinds(
    spec: Dict[str, Any], expected: Sequence[str], errors: List[str]
) -> Dict[str, BoundaryKind]:
    tags = spec.get("boundary_tags") or {}
    kinds: Dict[str, BoundaryKind] = {}
    for tag in expected:
        raw = tags.get(tag)
        if raw is None:
            errors.append(f"mesh.boundary_tags.{tag}: boundary facet is untagged")
            continue
        try:
            kinds[tag] = BoundaryKind(raw)
        except ValueError:
            errors.append(f"mesh.boundary_tags.{tag}: must be 'dirichlet' or 'neumann', got {raw!r}")
    for tag in sorted(set(tags) - set(expected)):
        errors.append(f"mesh.boundary_tags.{tag}: unknown boundary tag")
    if kinds and BoundaryKind.DIRICHLET not in kinds.values():
        errors.append("mesh.boundary_tags: the Dirichlet part of the boundary must be nonempty")
    return kinds


def build_mesh(spec: Dict[str, Any]) -> Mesh:
    """Build a mesh from its description; raises ``ValueError`` listing every problem."""
    errors: List[str] = []
    try:
        kind = MeshKind(spec.get("kind"))
    except ValueError:
        raise ValueError(f"mesh.kind: unknown mesh kind {spec.get('kind')!r}") from None

    default_dim = 2 if kind == MeshKind.RECT else 3
    dim = spec.get("dim", default_dim)
    if dim not in (2, 3):
        errors.append(f"mesh.dim: must be 2 or 3, got {dim!r}")
        dim = default_dim

    if kind == MeshKind.POINT:
        kinds = _boundary_kinds(spec, COMPONENT_NAMES[dim], errors)
        if errors:
            raise ValueError("; ".join(errors))
        mesh = _point_mesh(dim, kinds)
    elif kind == MeshKind.SEGMENT:
        n_elems = _require_positive_int(spec, "n_elems", errors)
        length = _require_positive_float(spec, "length", errors)
        kinds = _boundary_kinds(spec, SEGMENT_ENDS + (LATERAL_TAG,), errors)
        if errors:
            raise ValueError("; ".join(errors))
        mesh = _segment_mesh(dim, n_elems, length, kinds)
    else:
        if dim != 2:
            errors.append("mesh.dim: rect meshes carry the two-dimensional model (dim = 2)")
        nx = _require_positive_int(spec, "nx", errors)
        ny = _require_positive_int(spec, "ny", errors)
        lx = _require_positive_float(spec, "lx", errors)
        ly = _require_positive_float(spec, "ly", errors)
        kinds = _boundary_kinds(spec, RECT_SIDES, errors)
        if errors:
            raise ValueError("; ".join(errors))
        mesh = _rect_mesh(nx, ny, lx, ly, kinds)

    if np.any(mesh.volumes <= 0):
        raise ValueError("mesh has an element of non-positive measure")
    logger.debug(
        f"built {mesh.kind.value} mesh: {mesh.n_vertices} vertices, "
        f"{mesh.n_elements} elements, {mesh.n_dofs} dofs"
    )
    return mesh


def _point_mesh(dim: int, kinds: Dict[str, BoundaryKind]) -> Mesh:
    m = n_components(dim)
    one = sp.csr_matrix(np.ones((1, 1)))
    return Mesh(
        kind=MeshKind.POINT,
        dim=dim,
        vertices=np.zeros((1, 1)),
        elements=np.zeros((1, 1), dtype=np.int64),
        volumes=np.ones(1),
        facets=np.zeros((0, 1), dtype=np.int64),
        facet_tags=(),
        boundary_kinds=kinds,
        strain_operator=sp.identity(m, format="csr"),
        dof_tags={name: np.array([j]) for j, name in enumerate(COMPONENT_NAMES[dim])},
        averaging=one,
        laplacian=sp.csr_matrix((1, 1)),
        node_measure=np.ones(1),
        dof_coords=np.zeros((m, 1)),
    )


def _segment_mesh(dim: int, n_elems: int, length: float, kinds: Dict[str, BoundaryKind]) -> Mesh:
    m = n_components(dim)
    h = length / n_elems
    n_vertices = n_elems + 1
    n_lateral = dim - 1
    n_dofs = n_vertices + n_lateral
    elements = np.stack([np.arange(n_elems), np.arange(1, n_vertices)], axis=1)

    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for e in range(n_elems):
        rows += [e * m, e * m]
        cols += [e, e + 1]
        vals += [-1.0 / h, 1.0 / h]
        for j in range(n_lateral):
            rows.append(e * m + 1 + j)
            cols.append(n_vertices + j)
            vals.append(1.0)
    strain_op = sp.csr_matrix((vals, (rows, cols)), shape=(n_elems * m, n_dofs))

    idx = np.arange(n_elems)
    averaging = sp.csr_matrix(
        (np.full(2 * n_elems, 0.5), (np.repeat(idx, 2), elements.ravel())),
        shape=(n_elems, n_vertices),
    )
    local = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    lap_rows = np.repeat(elements, 2, axis=1).ravel()
    lap_cols = np.tile(elements, (1, 2)).ravel()
    laplacian = sp.csr_matrix(
        (np.tile(local.ravel(), n_elems), (lap_rows, lap_cols)), shape=(n_vertices, n_vertices)
    )
    node_measure = np.zeros(n_vertices)
    np.add.at(node_measure, elements.ravel(), h / 2.0)

    vertices = np.linspace(0.0, length, n_vertices)[:, None]
    dof_coords = np.concatenate([vertices, np.zeros((n_lateral, 1))])
    return Mesh(
        kind=MeshKind.SEGMENT,
        dim=dim,
        vertices=vertices,
        elements=elements,
        volumes=np.full(n_elems, h),
        facets=np.array([[0], [n_elems]]),
        facet_tags=SEGMENT_ENDS,
        boundary_kinds=kinds,
        strain_operator=strain_op,
        dof_tags={
            "left": np.array([0]),
            "right": np.array([n_elems]),
            LATERAL_TAG: n_vertices + np.arange(n_lateral),
        },
        averaging=averaging,
        laplacian=laplacian,
        node_measure=node_measure,
        dof_coords=dof_coords,
    )


def _rect_mesh(nx: int, ny: int, lx: float, ly: float, kinds: Dict[str, BoundaryKind]) -> Mesh:
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.stack([gx.ravel(), gy.ravel()], axis=1)
    n_vertices = vertices.shape[0]

    def vid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    triangles = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))
    elements = np.array(triangles, dtype=np.int64)

    side_edges = {
        "left": [(vid(0, j), vid(0, j + 1)) for j in range(ny)],
        "right": [(vid(nx, j), vid(nx, j + 1)) for j in range(ny)],
        "bottom": [(vid(i, 0), vid(i + 1, 0)) for i in range(nx)],
        "top": [(vid(i, ny), vid(i + 1, ny)) for i in range(nx)],
    }
    facets = np.array([edge for side in RECT_SIDES for edge in side_edges[side]], dtype=np.int64)
    facet_tags = tuple(side for side in RECT_SIDES for _ in side_edges[side])

    x = vertices[elements]
    d1 = x[:, 1] - x[:, 0]
    d2 = x[:, 2] - x[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    grads = np.empty((elements.shape[0], 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = (x[:, b, 1] - x[:, c, 1]) / (2.0 * area)
        grads[:, a, 1] = (x[:, c, 0] - x[:, b, 0]) / (2.0 * area)

    n_el = elements.shape[0]
    rows, cols, vals = [], [], []
    for a in range(3):
        ux = 2 * elements[:, a]
        uy = ux + 1
        base = 3 * np.arange(n_el)
        rows += [base, base + 1, base + 2, base + 2]
        cols += [ux, uy, ux, uy]
        vals += [grads[:, a, 0], grads[:, a, 1], 0.5 * grads[:, a, 1], 0.5 * grads[:, a, 0]]
    strain_op = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * n_el, 2 * n_vertices),
    )

    averaging = sp.csr_matrix(
        (np.full(3 * n_el, 1.0 / 3.0), (np.repeat(np.arange(n_el), 3), elements.ravel())),
        shape=(n_el, n_vertices),
    )
    local = area[:, None, None] * np.einsum("eai,ebi->eab", grads, grads)
    laplacian = sp.csr_matrix(
        (
            local.ravel(),
            (np.repeat(elements, 3, axis=1).ravel(), np.tile(elements, (1, 3)).ravel()),
        ),
        shape=(n_vertices, n_vertices),
    )
    node_measure = np.zeros(n_vertices)
    np.add.at(node_measure, elements.ravel(), np.repeat(area / 3.0, 3))

    dof_tags: Dict[str, NDArray[np.int64]] = {}
    owned: set[int] = set()
    for side in RECT_SIDES:
        side_vertices = sorted({v for edge in side_edges[side] for v in edge})
        # A corner shared by two Dirichlet sides takes its data from the first one.
        if kinds.get(side) == BoundaryKind.DIRICHLET:
            side_vertices = [v for v in side_vertices if v not in owned]
            owned.update(side_vertices)
        dofs = np.array([[2 * v, 2 * v + 1] for v in side_vertices], dtype=np.int64).reshape(-1)
        dof_tags[side] = dofs

    return Mesh(
        kind=MeshKind.RECT,
        dim=2,
        vertices=vertices,
        elements=elements,
        volumes=area,
        facets=facets,
        facet_tags=facet_tags,
        boundary_kinds=kinds,
        strain_operator=strain_op,
        dof_tags=dof_tags,
        averaging=averaging,
        laplacian=laplacian,
        node_measure=node_measure,
        dof_coords=np.repeat(vertices, 2, axis=0),
    )


# -- fields and assembly ------------------------------------------------------


def strain(u: ArrayLike, mesh: Mesh) -> SymTensor:
    """Element strains of the P1 displacement ``u`` (constant per element)."""
    values = np.asarray(u, dtype=float)
    if values.shape != (mesh.n_dofs,):
        raise ValueError(f"displacement must have shape ({mesh.n_dofs},), got {values.shape}")
    comps = (mesh.strain_operator @ values).reshape(mesh.n_elements, mesh.n_components)
    return SymTensor(mesh.dim, comps)


def internal_force(sigma: SymTensor, mesh: Mesh) -> NDArray[np.float64]:
    """Nodal force ``B^T (vol * W sigma)``, the derivative of the stored energy in u."""
    weighted = mesh.volumes[:, None] * voigt_weights(mesh.dim) * sigma.components
    return mesh.strain_operator.T @ weighted.reshape(-1)


def stiffness_matrix(mesh: Mesh, tangents: NDArray[np.float64]) -> sp.csr_matrix:
    """``B^T blockdiag(vol * diag(w) D_e) B`` for per-element tangents ``D_e``."""
    m = mesh.n_components
    blocks = np.broadcast_to(tangents, (mesh.n_elements, m, m))
    weighted = mesh.volumes[:, None, None] * voigt_weights(mesh.dim)[None, :, None] * blocks
    n_el = mesh.n_elements
    block_diag = sp.bsr_matrix(
        (weighted, np.arange(n_el), np.arange(n_el + 1)), shape=(n_el * m, n_el * m)
    )
    B = mesh.strain_operator
    return (B.T @ block_diag.tocsr() @ B).tocsr()


def elastic_stiffness(mesh: Mesh, hooke: HookeParams) -> sp.csr_matrix:
    return stiffness_matrix(mesh, hooke.matrix())


def _point_values(data: NDArray[np.float64], size: int, where: str) -> NDArray[np.float64]:
    flat = np.asarray(data, dtype=float).reshape(-1)
    if flat.size == 1:
        return np.full(size, flat[0])
    if flat.size != size:
        raise ValueError(f"{where}: expected {size} values, got {flat.size}")
    return flat


def dirichlet_values(t: float, lh: LoadHistory, mesh: Mesh) -> NDArray[np.float64]:
    """Discrete lifting: prescribed values on Dirichlet dofs, zero elsewhere."""
    w = np.zeros(mesh.n_dofs)
    for tag in mesh.tags_of_kind(BoundaryKind.DIRICHLET):
        dofs = mesh.dof_tags[tag]
        if dofs.size == 0 or tag not in lh.dirichlet:
            continue
        data = lh.dirichlet[tag]
        if mesh.kind == MeshKind.RECT:
            coords = mesh.vertices[dofs[::2] // 2]
            values = data.at(t, coords)
            w[dofs] = np.broadcast_to(values, (coords.shape[0], 2)).reshape(-1)
        else:
            w[dofs] = _point_values(data.value(t), dofs.size, f"loading.w.{tag}")
    return w


def assemble_load(t: float, lh: LoadHistory, mesh: Mesh) -> NDArray[np.float64]:
    """Load vector F with ``F @ v = <L(t), v>`` for every discrete field v."""
    F = np.zeros(mesh.n_dofs)
    neumann = mesh.tags_of_kind(BoundaryKind.NEUMANN)
    weights = voigt_weights(mesh.dim)

    if mesh.kind == MeshKind.POINT:
        for tag in neumann:
            if tag in lh.traction:
                j = int(mesh.dof_tags[tag][0])
                F[j] += weights[j] * float(np.asarray(lh.traction[tag](t)).reshape(-1)[0])
        return F

    if mesh.kind == MeshKind.SEGMENT:
        for tag in neumann:
            if tag not in lh.traction:
                continue
            dofs = mesh.dof_tags[tag]
            if tag == LATERAL_TAG:
                F[dofs] += _point_values(lh.traction[tag](t), dofs.size, f"loading.g.{tag}") * mesh.measure
            else:
                F[dofs] += float(np.asarray(lh.traction[tag](t)).reshape(-1)[0])
        if lh.body_force is not None:
            f = float(np.asarray(lh.body_force(t)).reshape(-1)[0])
            np.add.at(F, mesh.elements.ravel(), np.repeat(f * mesh.volumes / 2.0, 2))
        return F

    for tag in neumann:
        if tag not in lh.traction:
            continue
        g = np.broadcast_to(np.asarray(lh.traction[tag](t), dtype=float), (2,))
        for facet, facet_tag in zip(mesh.facets, mesh.facet_tags):
            if facet_tag != tag:
                continue
            length = float(np.linalg.norm(mesh.vertices[facet[1]] - mesh.vertices[facet[0]]))
            for v in facet:
                F[2 * v : 2 * v + 2] += g * length / 2.0
    if lh.body_force is not None:
        f = np.broadcast_to(np.asarray(lh.body_force(t), dtype=float), (2,))
        share = mesh.volumes / 3.0
        for a in range(3):
            np.add.at(F, 2 * mesh.elements[:, a], f[0] * share)
            np.add.at(F, 2 * mesh.elements[:, a] + 1, f[1] * share)
    return F


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: NDArray[np.float64]


@dataclass
class ConstrainedSystem:
    """Linear system restricted to the free dofs, plus the Dirichlet lifting."""

    matrix: sp.csr_matrix
    rhs: NDArray[np.float64]
    free: NDArray[np.int64]
    lifting: NDArray[np.float64]

    def reconstruct(self, u_free: ArrayLike) -> NDArray[np.float64]:
        u = self.lifting.copy()
        u[self.free] = np.asarray(u_free, dtype=float)
        return u

    def solve(self) -> NDArray[np.float64]:
        if self.free.size == 0:
            return self.lifting.copy()
        return self.reconstruct(np.atleast_1d(spla.spsolve(self.matrix.tocsc(), self.rhs)))


def apply_dirichlet(t: float, lh: LoadHistory, mesh: Mesh, system: LinearSystem) -> ConstrainedSystem:
    """Eliminate the Dirichlet dofs: ``K_ff u_f = F_f - K_fd w_d``."""
    w = dirichlet_values(t, lh, mesh)
    free = mesh.free_dofs
    K = system.matrix.tocsr()
    rhs = system.rhs[free] - K[free][:, mesh.dirichlet_mask] @ w[mesh.dirichlet_mask]
    return ConstrainedSystem(K[free][:, free], rhs, free, w)


def solve_elastic(
    mesh: Mesh,
    hooke: HookeParams,
    t: float,
    lh: LoadHistory,
    p: Optional[SymTensor] = None,
) -> NDArray[np.float64]:
    """Linear elastic equilibrium at time t with the plastic strain ``p`` frozen."""
    K = elastic_stiffness(mesh, hooke)
    F = assemble_load(t, lh, mesh)
    if p is not None:
        F = F + internal_force(hooke.apply(p), mesh)
    return apply_dirichlet(t, lh, mesh, LinearSystem(K, F)).solve()


def strain_norm(u: ArrayLike, mesh: Mesh) -> float:
    """L2 norm of the element strains of ``u``."""
    e = strain(u, mesh)
    return float(np.sqrt(mesh.volumes @ e.inner(e)))
