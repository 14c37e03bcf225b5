import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semilag.corpus import load_builtin
from semilag.exceptions import TooLargeError
from semilag.model import HQPInstance, MixedIntegerQP, QPInstance, RobustMIQP
from semilag.oracle import (MEMBER, NON_MEMBER, UNDECIDED, membership, solve_miqp_bruteforce, solve_qp_bruteforce,
                            solve_robust_bruteforce)
from semilag.reformulate import hqp_to_qp, miqp_to_pd, robust_to_ap

from instances import sym


def affine_grid_min(f, A, b, step=1e-3, span=4.0):
    """Min of f over {x >= 0 : A x = b} by gridding the null space of A (dimension <= 2)."""
    x0, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ x0 - b) > 1e-9:
        return np.inf
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10))
    N = Vt[rank:].T
    k = N.shape[1]
    assert k <= 2
    if k == 0:
        return f(x0) if x0.min() >= -1e-12 else np.inf
    t = np.arange(-span, span + step / 2, step)
    T = np.stack(np.meshgrid(*[t] * k, indexing="ij"), -1).reshape(-1, k)
    X = x0 + T @ N.T
    X = X[X.min(axis=1) >= -1e-12]
    if len(X) == 0:
        return np.inf
    return min(f(x) for x in X) if len(X) < 200 else float(np.min(f.values(X)))


def test_miqp_linear_cost():
    p = MixedIntegerQP.build(np.zeros((2, 2)), [1.0, 1.0], 0.0, [([1.0, 1.0], 1.0)], 2)
    assert solve_miqp_bruteforce(p).value == 1.0


def test_miqp_product():
    p = MixedIntegerQP.build([[0.0, 0.5], [0.5, 0.0]], [0.0, 0.0], 0.0, [([1.0, 1.0], 1.0)], 2)
    assert solve_miqp_bruteforce(p).value == 0.0


def test_miqp_infeasible():
    p = MixedIntegerQP.build(np.eye(2), [0.0, 0.0], 0.0, [([1.0, 1.0], 0.5)], 2)
    assert solve_miqp_bruteforce(p).value == np.inf


@pytest.mark.parametrize("seed,m", [(0, 2), (1, 2), (2, 1), (3, 1)])
def test_miqp_random_against_affine_grid(seed, m):
    rng = np.random.default_rng(seed)
    n, s = 4, 2
    a = rng.uniform(0.2, 2, size=(m, n)).round(2)
    rhs = (a @ rng.uniform(0, 1, size=n)).round(2)
    p = MixedIntegerQP.build(sym(rng, n), rng.normal(size=n), 0.0, list(zip(a, rhs)), s)
    res = solve_miqp_bruteforce(p)
    best = np.inf
    for pattern in itertools.product((0.0, 1.0), repeat=s):
        E = np.zeros((s, n))
        E[np.arange(s), np.arange(s)] = 1.0
        best = min(best, affine_grid_min(p.objective, np.vstack([a, E]), np.concatenate([rhs, pattern])))
    assert abs(res.value - best) <= 1e-3 or (np.isinf(best) and np.isinf(res.value))


def test_qp_e1():
    res = solve_qp_bruteforce(load_builtin("e1"))
    assert abs(res.value + 1) < 1e-9 and abs(res.argmin[0] - 1) < 1e-9


def test_qp_hqp_polar_grid():
    h = HQPInstance.build(-np.eye(2), np.eye(2))
    res = solve_qp_bruteforce(hqp_to_qp(h))
    r, th = np.meshgrid(np.linspace(0, 1, 401), np.linspace(0, np.pi / 2, 401))
    X = np.column_stack([(r * np.cos(th)).ravel(), (r * np.sin(th)).ravel()])
    polar = np.einsum("ij,jk,ik->i", X, h.A, X).min()
    assert abs(res.value - polar) <= 1e-6 + res.error_bar


def test_qp_infeasible():
    res = solve_qp_bruteforce(load_builtin("infeasible"))
    assert res.value == np.inf and not res.feasible


def test_qp_size_limit():
    p = QPInstance.build(np.eye(5), np.zeros(5), 0.0, [(np.eye(5), np.zeros(5), -1.0)])
    with pytest.raises(TooLargeError):
        solve_qp_bruteforce(p)


def test_image_membership_shifted_system_exceeds_two():
    # {g0 <= 1, g1 <= -1} pins x^2 - x = 1, where f = x^2 > 2, so (1,-1,2) is not in the image
    p = QPInstance.build([[1.0]], [0.0], 0.0, [([[1.0]], [-1.0], -1.0), ([[-1.0]], [1.0], 1.0)])
    res = solve_qp_bruteforce(p)
    assert res.value > 2
    assert abs(res.value - (1 + np.sqrt(5)) ** 2 / 4) < 1e-6


def test_robust_no_uncertainty_is_nominal():
    rng = np.random.default_rng(3)
    A0 = sym(rng, 3)
    c0 = rng.normal(size=3)
    eqs = [([1.0, 1.0, 1.0], 1.0)]
    p = RobustMIQP.build(A0, 0.0, c0, np.eye(3)[:1], [[0.0]], eqs, 1)
    nominal = MixedIntegerQP.build(A0, c0, 0.0, eqs, 1)
    assert abs(solve_robust_bruteforce(p).value - solve_miqp_bruteforce(nominal).value) <= 1e-12


def test_robust_single_zero_scenario():
    rng = np.random.default_rng(4)
    A0, c0 = sym(rng, 2), rng.normal(size=2)
    p = RobustMIQP.build(A0, 0.7, c0, np.eye(2), [[0.0, 0.0]], [([1.0, 1.0], 1.0)], 0)
    ref = MixedIntegerQP.build(A0 + 0.7 * np.eye(2), c0, 0.0, [([1.0, 1.0], 1.0)], 0)
    assert abs(solve_robust_bruteforce(p).value - solve_miqp_bruteforce(ref).value) <= 1e-12


def test_robust_toy_envelope_and_ap():
    p = load_builtin("robust_toy")
    env = min(p.rho * (x @ x) + max(p.scenario_costs() @ x) for x in np.eye(2))
    res = solve_robust_bruteforce(p)
    assert res.value == env == 2.5
    assert abs(solve_miqp_bruteforce(robust_to_ap(p).miqp).value - env) <= 1e-6


@pytest.mark.parametrize("name", ["knapsack", "knapsack_cost"])
def test_miqp_and_pd_grid_agree(name):
    p = load_builtin(name)
    g = solve_qp_bruteforce(miqp_to_pd(p).target)
    assert abs(solve_miqp_bruteforce(p).value - g.value) <= 1e-6 + g.error_bar


def test_membership_image_membership():
    p = load_builtin("image_membership")
    q = membership(p, [0.0, 0.0, 0.0])
    assert q.verdict == MEMBER and q.witness is not None
    assert membership(p, [2.0, -2.0, 4.0]).verdict == MEMBER
    q = membership(p, [1.0, -1.0, 2.0])
    assert q.verdict == NON_MEMBER and "certificate" in q.evidence


def test_membership_closure_gap():
    p = load_builtin("closure_gap")
    q = membership(p, [-1.0, 0.01])
    assert q.verdict == MEMBER
    x = q.witness
    assert p.constraints[0](x) <= -1 + 1e-9 and p.objective(x) <= 0.01 + 1e-9
    assert membership(p, [-1.0, 0.0]).verdict == NON_MEMBER


def test_membership_target_length():
    with pytest.raises(ValueError):
        membership(load_builtin("closure_gap"), [0.0])


@settings(max_examples=30)
@given(st.floats(-1, 3), st.floats(-2, 5), st.floats(0, 2), st.integers(0, 10))
def test_membership_monotone_and_witnessed(u, r, delta, which):
    p = load_builtin(["closure_gap", "upsilon", "e1"][which % 3])
    q = membership(p, [u, r])
    if q.verdict == MEMBER:
        x = q.witness
        assert x.min() >= 0
        assert p.constraints[0](x) <= u + 1e-9 and p.objective(x) <= r + 1e-9
        assert membership(p, [u + delta, r + delta]).verdict == MEMBER
    assert q.verdict in (MEMBER, NON_MEMBER, UNDECIDED)


def test_attainment_on_strongly_convexifiable_instances():
    for name in ("hqp_1d", "hqp_neg_identity", "hqp_identity"):
        res = solve_qp_bruteforce(hqp_to_qp(load_builtin(name)))
        assert res.argmin is not None and np.isfinite(res.value)
