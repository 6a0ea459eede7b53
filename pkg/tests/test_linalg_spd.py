from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypwarp.acceptance import random_bounded_spd
from hypwarp.errors import HypothesisViolated, NotSpd, ZeroVector
from hypwarp.linalg_spd import jacobi_eigh, quadratic_form_sandwich, spd_factor


def test_identity_factor():
    fac = spd_factor(np.eye(2), 2.0)
    assert np.array_equal(fac.eigenvalues, [1.0, 1.0])
    assert np.allclose(np.abs(fac.F), np.eye(2))


def test_diag_factor_bounds():
    fac = spd_factor(np.diag([4.0, 1.0]), 5.0)
    assert np.allclose(np.sort(np.abs(fac.F).max(axis=1)), [1.0, 2.0])
    assert np.allclose(fac.F.T @ fac.F, np.diag([4.0, 1.0]))
    assert np.abs(fac.F).max() == pytest.approx(2.0)
    assert fac.entry_bound == pytest.approx(2 * math.sqrt(5))
    assert np.abs(fac.F_inv).max() == pytest.approx(1.0)
    assert fac.inverse_entry_bound == pytest.approx(10.0)


def test_sandwich_identity():
    # lower bound |u|^2 / (n! c^n) = 1/8 for n = 2, c = 2
    assert quadratic_form_sandwich(np.eye(2), 2.0, [1.0, 0.0]) == pytest.approx((0.125, 4.0, 1.0))


def test_sandwich_diag():
    assert quadratic_form_sandwich(np.diag([4.0, 1.0]), 5.0, [1.0, 1.0]) == pytest.approx((2 / 50, 20.0, 5.0))


def test_errors():
    with pytest.raises(NotSpd):
        spd_factor(np.array([[1.0, 2.0], [0.0, 1.0]]), 5.0)
    with pytest.raises(NotSpd):
        spd_factor(np.diag([1.0, -1.0]), 5.0)
    with pytest.raises(HypothesisViolated) as exc:
        spd_factor(np.diag([4.0, 1.0]), 3.0)
    assert exc.value.which == "entry"
    with pytest.raises(HypothesisViolated) as exc:
        spd_factor(np.diag([0.1, 0.1]), 3.0)
    assert exc.value.which == "determinant"
    with pytest.raises(ZeroVector):
        quadratic_form_sandwich(np.eye(2), 2.0, [0.0, 0.0])


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(1)
    for n in range(2, 9):
        a = rng.standard_normal((n, n))
        G = a @ a.T + n * np.eye(n)
        mu, V = jacobi_eigh(G)
        assert np.allclose(mu, np.linalg.eigvalsh(G), rtol=1e-12)
        assert np.allclose(V @ np.diag(mu) @ V.T, G, atol=1e-12)
        assert np.allclose(V.T @ V, np.eye(n), atol=1e-13)


def test_jacobi_tiny_offdiagonal():
    G = np.array([[1.0, 1e-300], [1e-300, 2.0]])
    mu, _ = jacobi_eigh(G)
    assert np.allclose(mu, [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_factor_invariants(seed, n):
    rng = np.random.default_rng(seed)
    G, c = random_bounded_spd(rng, n)
    fac = spd_factor(G, c)
    lo, hi = fac.eigen_window
    assert np.all((lo < fac.eigenvalues) & (fac.eigenvalues < hi))
    assert np.abs(fac.F).max() < fac.entry_bound
    assert np.abs(fac.F_inv).max() < fac.inverse_entry_bound
    assert np.allclose(fac.F @ fac.F_inv, np.eye(n), atol=1e-8)
    u = rng.standard_normal(n)
    low, high, val = quadratic_form_sandwich(G, c, u)
    assert low < val < high
