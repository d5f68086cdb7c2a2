from __future__ import annotations

import math

import numpy as np
import pytest

from geoplast.engine.damage import (
    DamageFunctional,
    DamageLaw,
    alpha_point_closed_form,
    alpha_step,
    dissipation,
)
from geoplast.engine.discretization import Mesh, build_mesh

POINT_TAGS = {name: "dirichlet" for name in ("xx", "yy", "zz", "yz", "xz", "xy")}


@pytest.fixture
def point_mesh() -> Mesh:
    return build_mesh({"kind": "point", "dim": 3, "boundary_tags": POINT_TAGS})


@pytest.fixture
def segment_mesh() -> Mesh:
    return build_mesh(
        {
            "kind": "segment",
            "dim": 3,
            "n_elems": 4,
            "length": 1.0,
            "boundary_tags": {"left": "dirichlet", "right": "dirichlet", "lateral": "neumann"},
        }
    )


def test_c1_examples() -> None:
    assert DamageLaw(c_bar=2.0, w_d=1.0).c1(0.0) == 0.0
    assert DamageLaw(c_bar=2.0, w_d=1.0).c1(0.5) == pytest.approx(2.0)
    law = DamageLaw(c_bar=1.0, w_d=1.0, alpha_cap=1.0 - 1e-6)
    assert law.c1(law.alpha_cap) == pytest.approx(1e6, rel=1e-5)


def test_c1_is_capped_with_left_derivative() -> None:
    law = DamageLaw(c_bar=1.0, w_d=1.0, alpha_cap=0.9)
    assert law.c1(1.0) == pytest.approx(law.c1(0.9))
    assert law.c1_prime(0.9) == pytest.approx(100.0)
    assert law.c1_prime(0.95) == 0.0
    alphas = np.linspace(0.0, 0.85, 50)
    assert np.all(np.diff(law.c1(alphas)) > 0), "c1 must increase toward the sound state"


def test_damage_values_are_validated() -> None:
    law = DamageLaw(c_bar=1.0, w_d=1.0)
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        law.c1(1.5)
    with pytest.raises(ValueError):
        law.density(-0.1)
    with pytest.raises(ValueError):
        DamageLaw(c_bar=0.0, w_d=1.0)


def test_dissipation_examples(point_mesh: Mesh) -> None:
    assert dissipation(np.ones(1), point_mesh, DamageLaw(c_bar=1.0, w_d=3.0)) == 0.0
    assert dissipation(np.zeros(1), point_mesh, DamageLaw(c_bar=1.0, w_d=3.0)) == pytest.approx(3.0)
    assert dissipation(np.full(1, 0.25), point_mesh, DamageLaw(c_bar=1.0, w_d=4.0)) == pytest.approx(3.0)


def test_functional_gradient_matches_finite_differences(segment_mesh: Mesh) -> None:
    law = DamageLaw(c_bar=2.0, w_d=0.02, w_grad=1e-3)
    rng = np.random.default_rng(1)
    functional = DamageFunctional(segment_mesh, law, rng.uniform(0.0, 1e-3, size=4))
    alpha = rng.uniform(0.2, 0.8, size=5)
    h = 1e-6
    numeric = np.array(
        [
            (functional.energy(alpha + h * e) - functional.energy(alpha - h * e)) / (2.0 * h)
            for e in np.eye(5)
        ]
    )
    np.testing.assert_allclose(functional.gradient(alpha), numeric, rtol=1e-6, atol=1e-9)


def test_alpha_step_without_plastic_strain_keeps_previous_damage(segment_mesh: Mesh) -> None:
    law = DamageLaw(c_bar=2.0, w_d=0.02, w_grad=1e-3)
    alpha_prev = np.full(5, 0.7)
    result = alpha_step(alpha_prev, np.zeros(4), segment_mesh, law)
    np.testing.assert_array_equal(result.alpha, alpha_prev)


DAMAGE_SWEEP = [(float(p), a) for a in (0.9, 0.35) for p in np.linspace(0.0, 0.12, 10)]


@pytest.mark.parametrize("p_norm, alpha_prev", DAMAGE_SWEEP)
def test_alpha_step_matches_point_closed_form(point_mesh: Mesh, p_norm: float, alpha_prev: float) -> None:
    law = DamageLaw(c_bar=2.0, w_d=0.02)
    result = alpha_step(np.array([alpha_prev]), np.array([p_norm**2]), point_mesh, law, tol=1e-12)
    expected = alpha_point_closed_form(p_norm, alpha_prev, law)
    assert expected == pytest.approx(min(max(1.0 - p_norm * math.sqrt(100.0), 0.0), alpha_prev))
    assert result.alpha[0] == pytest.approx(expected, abs=1e-8)

    grid = np.linspace(0.0, alpha_prev, 1_000_001)
    energy = law.density(grid) + law.c1(grid) * p_norm**2
    assert expected == pytest.approx(grid[np.argmin(energy)], abs=2e-6)


def test_alpha_step_respects_box(segment_mesh: Mesh) -> None:
    law = DamageLaw(c_bar=2.0, w_d=0.02, w_grad=1e-3)
    alpha_prev = np.array([0.9, 0.9, 0.0, 0.9, 0.9])
    p_squared = np.full(4, 4e-4)
    result = alpha_step(alpha_prev, p_squared, segment_mesh, law)
    assert result.alpha[2] == 0.0
    assert np.all(result.alpha <= alpha_prev)
    assert np.all(result.alpha >= 0.0)
    functional = DamageFunctional(segment_mesh, law, p_squared)
    assert result.energy <= functional.energy(alpha_prev) + 1e-12
    assert result.residual <= 1e-10
