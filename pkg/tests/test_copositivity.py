import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semilag.copositivity import (NOT_COPOSITIVE, NOT_STRICT, STRICT, UNDECIDED, check_copositive,
                                  check_copositive_on_cone)
from semilag.exceptions import NonSymmetricError

HORN = np.array([[1, -1, 1, 1, -1],
                 [-1, 1, -1, 1, 1],
                 [1, -1, 1, -1, 1],
                 [1, 1, -1, 1, -1],
                 [-1, 1, 1, -1, 1]], dtype=float)


def simplex_lattice(n, k):
    """All points of the unit simplex with coordinates in {0, 1/k, ..., 1}."""
    pts = []
    for c in itertools.combinations(range(k + n - 1), n - 1):
        parts = np.diff([-1, *c, k + n - 1]) - 1
        pts.append(parts / k)
    return np.array(pts)


def grid_simplex_min(Q, samples=200_000, seed=0):
    n = Q.shape[0]
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.dirichlet(np.ones(n), size=samples), simplex_lattice(n, 8)])
    return np.einsum("ij,jk,ik->i", X, Q, X).min()


def test_mixed_sign_matrix_not_copositive():
    v = check_copositive(np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert v.status == NOT_COPOSITIVE
    d = v.witness
    assert d @ np.array([[1.0, 1.0], [1.0, -1.0]]) @ d < 0
    np.testing.assert_allclose(d, [0, 1], atol=1e-12)


def test_identity_strict():
    assert check_copositive(np.eye(4)).status == STRICT


def test_horn_copositive_not_strict():
    v = check_copositive(HORN)
    assert v.status == NOT_STRICT
    # independent grid oracle: min on the simplex is zero
    X = np.vstack([simplex_lattice(5, 12), np.random.default_rng(1).dirichlet(np.ones(5), 100_000)])
    vals = np.einsum("ij,jk,ik->i", X, HORN, X)
    assert vals.min() >= -1e-9 and np.sort(vals)[0] <= 1e-9


def test_nonsymmetric_rejected():
    with pytest.raises(NonSymmetricError):
        check_copositive(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_cone_fully_fixed_is_trivial():
    v = check_copositive_on_cone(-np.eye(3), zero_idx=(0, 1, 2))
    assert v.status == STRICT and v.trivial_cone


def test_cone_full_orthant_negative_identity():
    v = check_copositive_on_cone(-np.eye(2))
    assert v.status == NOT_COPOSITIVE
    assert v.witness @ -np.eye(2) @ v.witness < 0


def test_cone_with_fixed_coordinate():
    Q = np.diag([-1.0, 1.0])
    v = check_copositive_on_cone(Q, zero_idx=(0,))
    assert v.status == STRICT
    # by hand: the restriction is d_2^2 on d_2 >= 0
    d2 = np.linspace(0.01, 10, 1000)
    assert np.all(Q[1, 1] * d2 ** 2 > 0)


def test_cone_with_equality():
    # d1 + d2 = 0 with d >= 0 leaves only the origin
    v = check_copositive_on_cone(-np.eye(2), equalities=[np.ones(2)])
    assert v.status == STRICT and v.trivial_cone


def test_cone_slice_nontrivial():
    # d1 = d2 slice: Q = [[1,-2],[-2,1]] gives 2t^2 - 4t^2 < 0
    Q = np.array([[1.0, -2.0], [-2.0, 1.0]])
    v = check_copositive_on_cone(Q, equalities=[np.array([1.0, -1.0])])
    assert v.status == NOT_COPOSITIVE


@settings(max_examples=200)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_monotone_under_nonnegative_perturbation(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    Q = (M + M.T) / 2 + rng.uniform(0, 2) * np.eye(n)
    if check_copositive(Q).status != STRICT:
        return
    N = rng.uniform(0, 3, size=(n, n))
    assert check_copositive(Q + (N + N.T) / 2).status == STRICT


@settings(max_examples=100)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_witness_sound(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    Q = (M + M.T) / 2 + 0.5 * np.eye(n)
    v = check_copositive(Q)
    if v.status == NOT_COPOSITIVE:
        d = v.witness
        assert d.min() >= -1e-12 and abs(d.sum() - 1) <= 1e-12
        assert d @ Q @ d < -0.5e-9


@settings(max_examples=40)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_agrees_with_grid_oracle(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    Q = (M + M.T) / 2 + rng.uniform(0, 1.5) * np.eye(n) + np.abs(rng.normal(size=(n, n))) * 0.2
    Q = (Q + Q.T) / 2
    v = check_copositive(Q)
    assert v.status != UNDECIDED
    gmin = grid_simplex_min(Q, samples=20_000, seed=seed % 1000)
    if gmin < -1e-6:
        assert v.status == NOT_COPOSITIVE
    if v.status == NOT_COPOSITIVE:
        # the grid may miss a thin negative region, but never sees a value below the certified one
        assert v.witness_value <= gmin + 1e-9 or gmin < 0
    else:
        assert gmin >= -1e-9
