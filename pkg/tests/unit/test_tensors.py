from __future__ import annotations

import numpy as np
import pytest

from geoplast.engine.tensors import HookeParams, SymTensor, n_components, split


def test_split_identity_is_pure_mean() -> None:
    mean, dev = split(SymTensor.identity(3))
    assert mean == pytest.approx(1.0)
    np.testing.assert_allclose(dev.components, 0.0, atol=1e-15)


def test_split_uniaxial() -> None:
    mean, dev = split(SymTensor.from_matrix(np.diag([3.0, 0.0, 0.0])))
    assert mean == pytest.approx(1.0)
    np.testing.assert_allclose(dev.to_matrix(), np.diag([2.0, -1.0, -1.0]), atol=1e-15)
    assert dev.trace() == pytest.approx(0.0, abs=1e-15)


def test_split_zero() -> None:
    mean, dev = split(SymTensor.zeros(2))
    assert mean == 0.0
    assert not np.any(dev.components)


def test_inner_matches_frobenius_product() -> None:
    rng = np.random.default_rng(3)
    for dim in (2, 3):
        a = rng.standard_normal((5, dim, dim))
        b = rng.standard_normal((5, dim, dim))
        a, b = a + np.swapaxes(a, 1, 2), b + np.swapaxes(b, 1, 2)
        ta, tb = SymTensor.from_matrix(a), SymTensor.from_matrix(b)
        np.testing.assert_allclose(ta.inner(tb), np.einsum("kij,kij->k", a, b), rtol=1e-12)
        np.testing.assert_allclose(ta.to_matrix(), a)


def test_from_matrix_rejects_asymmetric() -> None:
    with pytest.raises(ValueError, match="not symmetric"):
        SymTensor.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_component_axis_is_validated() -> None:
    assert n_components(2) == 3 and n_components(3) == 6
    with pytest.raises(ValueError):
        SymTensor(3, np.zeros(3))
    with pytest.raises(ValueError):
        SymTensor(4, np.zeros(10))


def test_hooke_on_identity() -> None:
    h = HookeParams(lam=1.0, mu=1.0, dim=3)
    np.testing.assert_allclose(h.apply(SymTensor.identity(3)).to_matrix(), 5.0 * np.eye(3))


def test_hooke_on_deviator_is_shear_modulus() -> None:
    h = HookeParams(lam=7.0, mu=3.0, dim=3)
    e = SymTensor.from_matrix(np.array([[1.0, 0.5, 0.0], [0.5, -2.0, 0.1], [0.0, 0.1, 1.0]]))
    np.testing.assert_allclose(h.apply(e).components, 6.0 * e.components)
    assert not np.any(h.apply(SymTensor.zeros(3)).components)


def test_hooke_moduli_and_matrix() -> None:
    h = HookeParams(lam=40.0, mu=40.0, dim=3)
    assert h.bulk == pytest.approx(200.0)
    assert (h.gamma1, h.gamma2) == pytest.approx((80.0, 200.0))

    rng = np.random.default_rng(0)
    e = SymTensor(3, rng.standard_normal((4, 6)))
    np.testing.assert_allclose(h.apply(e).components, e.components @ h.matrix().T)
    assert np.all(h.energy_density(e) >= h.gamma1 / 2.0 * e.inner(e) - 1e-12)
    assert np.all(h.energy_density(e) <= h.gamma2 / 2.0 * e.inner(e) + 1e-12)


@pytest.mark.parametrize("lam, mu", [(1.0, 0.0), (-1.0, 1.0)])
def test_hooke_rejects_non_elliptic_moduli(lam: float, mu: float) -> None:
    with pytest.raises(ValueError):
        HookeParams(lam=lam, mu=mu, dim=3)
