from __future__ import annotations

from typing import Any, Dict

import numpy as np
import pytest

from geoplast.engine.discretization import (
    BoundaryData,
    LoadHistory,
    PiecewiseLinear,
    assemble_load,
    build_mesh,
    dirichlet_values,
    elastic_stiffness,
    internal_force,
    solve_elastic,
    strain,
)
from geoplast.engine.tensors import HookeParams
from geoplast.models.models import MeshKind

ALL_DIRICHLET = {side: "dirichlet" for side in ("left", "right", "bottom", "top")}


def rect_spec(nx: int = 2, ny: int = 2, lx: float = 1.0, ly: float = 1.0, **tags: str) -> Dict[str, Any]:
    return {
        "kind": "rect",
        "dim": 2,
        "nx": nx,
        "ny": ny,
        "lx": lx,
        "ly": ly,
        "boundary_tags": {**ALL_DIRICHLET, **tags},
    }


def test_segment_counts() -> None:
    mesh = build_mesh(
        {
            "kind": "segment",
            "dim": 3,
            "n_elems": 4,
            "length": 1.0,
            "boundary_tags": {"left": "dirichlet", "right": "neumann", "lateral": "neumann"},
        }
    )
    assert (mesh.n_vertices, mesh.n_elements, len(mesh.facets)) == (5, 4, 2)
    assert mesh.measure == pytest.approx(1.0)
    assert mesh.n_dofs == 5 + 2, "a 3-d segment carries two lateral strain unknowns"


def test_rect_counts() -> None:
    mesh = build_mesh(rect_spec())
    assert mesh.kind == MeshKind.RECT
    assert (mesh.n_vertices, mesh.n_elements, len(mesh.facets)) == (9, 8, 8)
    assert mesh.measure == pytest.approx(1.0)
    assert np.all(mesh.volumes > 0)


def test_rect_with_zero_cells_is_rejected() -> None:
    with pytest.raises(ValueError, match="mesh.nx"):
        build_mesh(rect_spec(nx=0))


def test_boundary_tags_are_validated() -> None:
    spec = rect_spec()
    del spec["boundary_tags"]["top"]
    with pytest.raises(ValueError, match="mesh.boundary_tags.top"):
        build_mesh(spec)
    with pytest.raises(ValueError, match="Dirichlet part"):
        build_mesh(rect_spec(left="neumann", right="neumann", bottom="neumann", top="neumann"))
    with pytest.raises(ValueError, match="unknown mesh kind"):
        build_mesh({"kind": "sphere"})


def test_strain_of_rigid_motions_vanishes() -> None:
    mesh = build_mesh(rect_spec(3, 2, 1.5, 1.0))
    translation = np.tile([0.3, -0.7], mesh.n_vertices)
    np.testing.assert_allclose(strain(translation, mesh).components, 0.0, atol=1e-14)
    skew = np.array([[0.0, 0.4], [-0.4, 0.0]])
    rotation = (mesh.vertices @ skew.T).reshape(-1)
    np.testing.assert_allclose(strain(rotation, mesh).components, 0.0, atol=1e-14)


def test_strain_of_identity_map() -> None:
    mesh = build_mesh(rect_spec(3, 2, 1.5, 1.0))
    e = strain(mesh.vertices.reshape(-1), mesh)
    np.testing.assert_allclose(e.components, np.tile([1.0, 1.0, 0.0], (mesh.n_elements, 1)), atol=1e-13)


def test_point_mesh_strain_is_the_unknown_vector() -> None:
    mesh = build_mesh({"kind": "point", "dim": 2, "boundary_tags": {"xx": "dirichlet", "yy": "neumann", "xy": "neumann"}})
    u = np.array([0.1, -0.2, 0.05])
    np.testing.assert_array_equal(strain(u, mesh).components, u[None, :])
    np.testing.assert_array_equal(mesh.free_dofs, [1, 2])


def test_zero_loads_give_zero_vector() -> None:
    mesh = build_mesh(rect_spec(left="neumann"))
    assert not np.any(assemble_load(0.5, LoadHistory(), mesh))


def test_body_force_partition_of_unity() -> None:
    mesh = build_mesh(rect_spec(3, 3))
    loads = LoadHistory(body_force=PiecewiseLinear.constant([0.4, -1.2]))
    F = assemble_load(0.0, loads, mesh)
    assert F[0::2].sum() == pytest.approx(0.4)
    assert F[1::2].sum() == pytest.approx(-1.2)


def test_edge_pressure_resultant() -> None:
    mesh = build_mesh(rect_spec(3, 3, left="neumann"))
    loads = LoadHistory(traction={"left": PiecewiseLinear.constant([0.3, 0.0])})
    F = assemble_load(0.0, loads, mesh)
    assert F[0::2].sum() == pytest.approx(0.3)
    assert F[1::2].sum() == pytest.approx(0.0)
    left_nodes = np.flatnonzero(np.isclose(mesh.vertices[:, 0], 0.0))
    assert set(np.flatnonzero(F[0::2])) == set(left_nodes)


def test_point_traction_on_shear_slot_is_weighted() -> None:
    mesh = build_mesh({"kind": "point", "dim": 2, "boundary_tags": {"xx": "dirichlet", "yy": "neumann", "xy": "neumann"}})
    loads = LoadHistory(traction={"xy": PiecewiseLinear.constant(0.1), "yy": PiecewiseLinear.constant(-0.5)})
    np.testing.assert_allclose(assemble_load(0.0, loads, mesh), [0.0, -0.5, 0.2])


def test_dirichlet_values() -> None:
    mesh = build_mesh(rect_spec(2, 2))
    assert not np.any(dirichlet_values(0.0, LoadHistory(), mesh))
    loads = LoadHistory(dirichlet={side: BoundaryData(PiecewiseLinear.constant([0.1, -0.2])) for side in ALL_DIRICHLET})
    w = dirichlet_values(0.0, loads, mesh)
    boundary = mesh.dirichlet_dofs
    np.testing.assert_allclose(w[boundary][0::2], 0.1)
    np.testing.assert_allclose(w[boundary][1::2], -0.2)
    assert not np.any(w[mesh.free_dofs])


def test_piecewise_linear_table() -> None:
    table = PiecewiseLinear([0.0, 1.0, 2.0], [0.0, 1.0, -1.0])
    assert table(0.5) == pytest.approx(0.5)
    assert table(1.5) == pytest.approx(0.0)
    assert table(5.0) == pytest.approx(-1.0)
    with pytest.raises(ValueError, match="strictly increasing"):
        PiecewiseLinear([0.0, 0.0], [1.0, 2.0])


def test_internal_force_is_stiffness_times_displacement() -> None:
    mesh = build_mesh(rect_spec(3, 2))
    hooke = HookeParams(lam=40.0, mu=40.0, dim=2)
    u = np.random.default_rng(4).standard_normal(mesh.n_dofs)
    K = elastic_stiffness(mesh, hooke)
    np.testing.assert_allclose(K @ u, internal_force(hooke.apply(strain(u, mesh)), mesh), rtol=1e-12, atol=1e-10)
    assert abs(K - K.T).max() < 1e-10


def test_affine_patch_test() -> None:
    mesh = build_mesh(rect_spec(4, 3, 2.0, 1.0))
    hooke = HookeParams(lam=40.0, mu=40.0, dim=2)
    grad = np.array([[1e-3, 2e-4], [-3e-4, -5e-4]])
    offset = np.array([0.01, -0.02])
    data = BoundaryData(PiecewiseLinear.constant(offset), PiecewiseLinear.constant(grad))
    loads = LoadHistory(dirichlet={side: data for side in ALL_DIRICHLET})
    u = solve_elastic(mesh, hooke, 0.0, loads)
    exact = offset + mesh.vertices @ grad.T
    np.testing.assert_allclose(u, exact.reshape(-1), atol=1e-12)
    sym = 0.5 * (grad + grad.T)
    np.testing.assert_allclose(strain(u, mesh).components, np.tile([sym[0, 0], sym[1, 1], sym[0, 1]], (mesh.n_elements, 1)), atol=1e-12)
