import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semilag.certificates import check_hqp
from semilag.dual import (CONVERGED, INFINITE_GAP, POSITIVE_GAP, UNBOUNDED_EVERYWHERE, ZERO_GAP, classify_gap,
                          eval_theta, gap_report, maximize_dual)
from semilag.exceptions import WeakDualityError
from semilag.model import HQPInstance, QPInstance
from semilag.oracle import PrimalResult, solve_qp_bruteforce
from semilag.orthant_qp import ATTAINED, MINUS_INFINITY, min_quadratic_polytope
from semilag.reformulate import hqp_to_qp

from instances import random_qp

CONCAVE_LINE = QPInstance.build([[-1.0]], [0.0], 0.0, [([[0.0]], [1.0], -1.0)])
HQP1 = hqp_to_qp(HQPInstance.build([[-1.0]], [[1.0]]))


def theta_1d(a, b, c):
    """Closed-form inf of a x^2 + b x + c over x >= 0."""
    if a < 0 or (a == 0 and b < 0):
        return -np.inf
    if a == 0:
        return c
    return c - max(0.0, -b) ** 2 / (4 * a)


def test_e1_theta_at_zero():
    assert eval_theta(CONCAVE_LINE, [0.0]).status == MINUS_INFINITY


def test_theta_convex_1d():
    p = QPInstance.build([[1.0]], [0.0], 0.0, [([[0.0]], [1.0], -1.0)])
    th = eval_theta(p, [0.0])
    assert th.status == ATTAINED and th.value == 0.0


def test_theta_hqp_1d_matches_grid():
    th = eval_theta(HQP1, [1.0])
    xs = np.linspace(0, 100, 100_001)
    grid = (0.0 * xs ** 2 - 1.0).min()
    assert th.status == ATTAINED and abs(th.value - grid) < 1e-12


def test_theta_dimension_check():
    with pytest.raises(ValueError):
        eval_theta(CONCAVE_LINE, [1.0, 2.0])


def test_e1_dual_unbounded_everywhere():
    res = maximize_dual(CONCAVE_LINE)
    assert res.best_value == -np.inf
    assert res.termination == UNBOUNDED_EVERYWHERE


def test_hqp_1d_dual_matches_grid():
    us = np.arange(0, 10 + 1e-9, 1e-3)
    grid_max = max(theta_1d(-1 + u, 0.0, -u) for u in us)
    res = maximize_dual(HQP1)
    assert res.termination == CONVERGED
    assert abs(res.best_value - grid_max) <= 2e-6


def test_no_constraints_convex():
    p = QPInstance.build(np.eye(2), [-2.0, 1.0], 0.5)
    res = maximize_dual(p)
    assert abs(res.best_value - (0.5 - 1.0)) < 1e-12


def test_gap_report_e1():
    primal = solve_qp_bruteforce(CONCAVE_LINE)
    rep = gap_report(CONCAVE_LINE, primal, maximize_dual(CONCAVE_LINE))
    assert abs(rep.primal_value + 1) < 1e-6
    assert rep.dual_value == -np.inf and rep.classification == INFINITE_GAP


def test_gap_report_hqp_with_certificate():
    h = HQPInstance.build([[-1.0]], [[1.0]])
    xs = np.linspace(0, 1, 100_001)
    primal = PrimalResult(float((-(xs ** 2)).min()), np.array([1.0]), "grid")
    rep = gap_report(HQP1, primal, maximize_dual(HQP1), [check_hqp(h)])
    assert rep.classification == ZERO_GAP and abs(rep.gap) <= 1e-5
    assert rep.certificates[0].holds


def test_gap_report_convex_with_slater_point():
    # min |x|^2 - 2x1 - 2x2 s.t. x1 + x2 <= 1; KKT value from the polytope solver in slack form
    p = QPInstance.build(np.eye(2), [-2.0, -2.0], 0.0, [(np.zeros((2, 2)), [1.0, 1.0], -1.0)])
    Q = np.diag([1.0, 1.0, 0.0])
    kkt = min_quadratic_polytope(Q, np.array([-2.0, -2.0, 0.0]), 0.0, [(np.ones(3), 1.0)])
    rep = gap_report(p, PrimalResult(kkt.value), maximize_dual(p))
    assert rep.classification == ZERO_GAP
    assert abs(kkt.value + 1.5) < 1e-12


def test_weak_duality_breach_raises():
    res = maximize_dual(HQP1)
    with pytest.raises(WeakDualityError):
        gap_report(HQP1, PrimalResult(-2.0), res)


def test_classify():
    assert classify_gap(1.0, 1.0 - 1e-6)[0] == ZERO_GAP
    assert classify_gap(1.0, 0.5)[0] == POSITIVE_GAP
    assert classify_gap(1.0, -np.inf)[0] == INFINITE_GAP


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_dual_result_invariants(seed):
    rng = np.random.default_rng(seed)
    p = random_qp(rng, n=2, m=1)
    res = maximize_dual(p, max_iter=80)
    hist = np.array(res.history, dtype=float)
    finite = hist[np.isfinite(hist)]
    assert np.all(np.diff(finite) >= 0)
    if res.best_u is not None:
        assert res.best_u.min() >= 0
        again = eval_theta(p, res.best_u)
        assert abs(again.value - res.best_value) <= 1e-7 * (1 + abs(res.best_value))
    primal = solve_qp_bruteforce(p, grid_points=20_000)
    if np.isfinite(primal.value):
        assert res.best_value <= primal.value + 1e-6


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_supergradient_cuts_valid(seed):
    rng = np.random.default_rng(seed)
    p = random_qp(rng, n=2, m=2)
    for _ in range(5):
        u = rng.uniform(0, 3, size=p.m)
        th = eval_theta(p, u)
        if th.status != ATTAINED:
            continue
        g = p.constraint_values(th.x)
        for _ in range(5):
            v = rng.uniform(0, 3, size=p.m)
            tv = eval_theta(p, v)
            if tv.status == ATTAINED:
                assert tv.value <= th.value + g @ (v - u) + 1e-7 * (1 + abs(th.value))
            else:
                assert tv.value == -np.inf


def test_zero_curvature_ray_does_not_close_the_model():
    # min -x s.t. x - 1 <= 0: theta(u) = -u for u >= 1 and -inf below, so sup = -1
    p = QPInstance.build(np.zeros((1, 1)), [-1.0], 0.0, [(np.zeros((1, 1)), [1.0], -1.0)])
    res = maximize_dual(p)
    assert res.termination == CONVERGED
    assert abs(res.best_value + 1) <= 1e-6


def test_linear_divergence_everywhere():
    # min -x s.t. -x <= 0: theta(u) = -inf for every u
    p = QPInstance.build(np.zeros((1, 1)), [-1.0], 0.0, [(np.zeros((1, 1)), [-1.0], 0.0)])
    res = maximize_dual(p)
    assert res.best_value == -np.inf and res.termination == UNBOUNDED_EVERYWHERE
    assert res.iterations < 50
