"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import time
from contextlib import contextmanager

import numpy as np
import pytest

from semilag.copositivity import NOT_COPOSITIVE, STRICT, check_copositive
from semilag.corpus import builtin_names, check_instance, load_builtin
from semilag.dual import CONVERGED, INFINITE_GAP, eval_theta, maximize_dual
from semilag.model import MixedIntegerQP, QPInstance, RobustMIQP
from semilag.oracle import (MEMBER, NON_MEMBER, membership, solve_miqp_bruteforce, solve_qp_bruteforce,
                            solve_robust_bruteforce)
from semilag.orthant_qp import ATTAINED
from semilag.pipeline import gap
from semilag.reformulate import (build_copositive_relaxation, hqp_to_qp, miqp_to_pd, robust_to_ap,
                                 standard_form_alpha_star)

from instances import certified_miqps, certified_robust, random_hqp, random_miqp, random_qp, sym


@contextmanager
def criterion(capsys, number, title):
    t0 = time.perf_counter()
    info = {}
    ok = False
    try:
        yield info
        ok = True
    finally:
        dt = time.perf_counter() - t0
        extra = "; ".join(f"{k}={v}" for k, v in info.items())
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'} {title} [{dt:.2f}s] {extra}")


def test_criterion_01_e1_regression(capsys):
    with criterion(capsys, 1, "concave line infinite gap") as info:
        t0 = time.perf_counter()
        primal, dual, rep = gap(load_builtin("e1"))
        dt = time.perf_counter() - t0
        info.update(primal=rep.primal_value, dual=rep.dual_value, cls=rep.classification)
        assert abs(rep.primal_value + 1) <= 1e-6
        assert rep.dual_value == -np.inf
        assert rep.classification == INFINITE_GAP
        assert dt < 1.0


def test_criterion_02_image_membership_membership(capsys):
    with criterion(capsys, 2, "lifted image membership triple") as info:
        t0 = time.perf_counter()
        p = load_builtin("image_membership")
        a = membership(p, [0, 0, 0])
        b = membership(p, [2, -2, 4])
        c = membership(p, [1, -1, 2])
        info.update(verdicts=(a.verdict, b.verdict, c.verdict))
        assert a.verdict == MEMBER and b.verdict == MEMBER
        assert c.verdict == NON_MEMBER
        assert "interval" in c.evidence.get("certificate", "") or "forced-zero" in c.evidence.get("certificate", "")
        assert time.perf_counter() - t0 < 5


def test_criterion_03_closure_gap_closure(capsys):
    with criterion(capsys, 3, "image not closed") as info:
        t0 = time.perf_counter()
        p = load_builtin("closure_gap")
        for k in (1, 10, 100):
            q = membership(p, [-1.0, 1.0 / k])
            assert q.verdict == MEMBER, k
            assert p.constraints[0](q.witness) <= -1 + 1e-9 and p.objective(q.witness) <= 1.0 / k + 1e-9
        q0 = membership(p, [-1.0, 0.0])
        info.update(limit_point=q0.verdict)
        assert q0.verdict == NON_MEMBER
        assert time.perf_counter() - t0 < 5


def test_criterion_04_non_copositive_pair(capsys):
    with criterion(capsys, 4, "non-copositive pair and midpoint") as info:
        t0 = time.perf_counter()
        for M in ([[1.0, 1.0], [1.0, -1.0]], [[-2.0, 1.0], [1.0, 1.0]]):
            M = np.array(M)
            v = check_copositive(M)
            assert v.status == NOT_COPOSITIVE
            assert v.witness is not None and v.witness.min() >= 0 and v.witness @ M @ v.witness < 0
        p = load_builtin("upsilon")
        ends = [membership(p, [-1.0, 1.0]).verdict, membership(p, [1.0, -2.0]).verdict]
        mid = membership(p, [0.0, -0.5])
        info.update(ends=ends, midpoint=mid.verdict)
        assert ends == [MEMBER, MEMBER]
        assert mid.verdict == NON_MEMBER
        assert time.perf_counter() - t0 < 5


def test_criterion_05_hqp_zero_gap(capsys):
    with criterion(capsys, 5, "HQP zero gap, 20 random instances") as info:
        rng = np.random.default_rng(505)
        worst_gap = worst_alpha = worst_t = 0.0
        for _ in range(20):
            h = random_hqp(rng, int(rng.integers(1, 4)))
            t0 = time.perf_counter()
            qp = hqp_to_qp(h)
            primal = solve_qp_bruteforce(qp)
            dual = maximize_dual(qp)
            dt = time.perf_counter() - t0
            alpha = standard_form_alpha_star(h)
            worst_gap = max(worst_gap, abs(primal.value - dual.best_value))
            worst_alpha = max(worst_alpha, abs(primal.value - min(0.0, alpha)))
            worst_t = max(worst_t, dt)
            assert abs(primal.value - dual.best_value) <= 1e-3
            assert abs(primal.value - min(0.0, alpha)) <= 1e-4
            assert dt < 30
        info.update(max_gap=f"{worst_gap:.2e}", max_alpha_dev=f"{worst_alpha:.2e}", max_time=f"{worst_t:.2f}")


def test_criterion_06_miqp_zero_gap(capsys):
    with criterion(capsys, 6, "MIQP zero gap, 10 certified instances") as info:
        rng = np.random.default_rng(606)
        worst_gap = worst_t = 0.0
        for p in certified_miqps(rng, 10, n_max=5, m_max=2, s_max=2):
            t0 = time.perf_counter()
            primal = solve_miqp_bruteforce(p)
            dual = maximize_dual(miqp_to_pd(p).target)
            dt = time.perf_counter() - t0
            g = abs(primal.value - dual.best_value)
            worst_gap, worst_t = max(worst_gap, g), max(worst_t, dt)
            assert g <= 1e-3, (primal.value, dual.best_value, dual.termination)
            assert dt < 60
        info.update(max_gap=f"{worst_gap:.2e}", max_time=f"{worst_t:.2f}")


def test_criterion_07_robust_pipeline(capsys):
    with criterion(capsys, 7, "robust pipeline, 5 toy instances") as info:
        rng = np.random.default_rng(3)
        worst_eq = worst_gap = worst_t = 0.0
        for p in certified_robust(rng, 5):
            t0 = time.perf_counter()
            direct = solve_robust_bruteforce(p)
            ap = robust_to_ap(p)
            lifted = solve_miqp_bruteforce(ap.miqp)
            dual = maximize_dual(ap.target)
            dt = time.perf_counter() - t0
            worst_eq = max(worst_eq, abs(direct.value - lifted.value))
            worst_gap = max(worst_gap, abs(direct.value - dual.best_value))
            worst_t = max(worst_t, dt)
            assert abs(direct.value - lifted.value) <= 1e-6
            assert abs(direct.value - dual.best_value) <= 1e-3
            assert dt < 120
        info.update(max_equiv=f"{worst_eq:.1e}", max_gap=f"{worst_gap:.1e}", max_time=f"{worst_t:.1f}")


def _random_instances(rng, count):
    """Mixed population: small QPs, HQPs and MIQPs with their primal values."""
    out = []
    while len(out) < count:
        kind = len(out) % 4
        if kind in (0, 1):
            p = random_qp(rng, n=int(rng.integers(1, 3)), m=int(rng.integers(0, 2)))
            out.append((p, solve_qp_bruteforce(p, grid_points=40_000).value))
        elif kind == 2:
            qp = hqp_to_qp(random_hqp(rng, int(rng.integers(1, 3))))
            out.append((qp, solve_qp_bruteforce(qp, grid_points=40_000).value))
        else:
            p = random_miqp(rng, n_max=3, m_max=1, s_max=2)
            out.append((miqp_to_pd(p).target, solve_miqp_bruteforce(p).value))
    return out


def test_criterion_08_weak_duality(capsys):
    with criterion(capsys, 8, "weak duality on corpus + 200 random") as info:
        breaches = []
        for name in builtin_names():
            for row in check_instance(name):
                if row.check == "weak_duality" and not row.passed:
                    breaches.append((name, row.got))
        rng = np.random.default_rng(808)
        worst = -np.inf
        for p, pv in _random_instances(rng, 200):
            d = maximize_dual(p, max_iter=150).best_value
            if np.isfinite(pv) and np.isfinite(d):
                worst = max(worst, d - pv)
                if d > pv + 1e-6:
                    breaches.append((p.name, d, pv))
        info.update(breaches=len(breaches), max_excess=f"{worst:.2e}")
        assert not breaches, breaches


def test_criterion_09_property_suites(capsys):
    with criterion(capsys, 9, "property suites") as info:
        rng = np.random.default_rng(909)
        # concavity of theta at midpoints
        triples = 0
        worst = -np.inf
        pool = [random_qp(rng, n=2, m=2) for _ in range(20)]
        attempts = 0
        while triples < 500:
            attempts += 1
            assert attempts < 20_000
            p = pool[attempts % len(pool)]
            u, v = rng.uniform(0, 3, size=(2, p.m))
            tu, tv, tm = eval_theta(p, u), eval_theta(p, v), eval_theta(p, (u + v) / 2)
            if not (tu.status == tv.status == tm.status == ATTAINED):
                continue
            triples += 1
            viol = (tu.value + tv.value) / 2 - tm.value
            worst = max(worst, viol)
            assert viol <= 1e-7
        # supergradient cuts from full dual runs, each re-verified against fresh evaluations
        cuts = 0
        for p in pool[:8]:
            res = maximize_dual(p, max_iter=60)
            attained = [pt for pt in res.points if pt.theta.status == ATTAINED]
            for pt in attained:
                g = p.constraint_values(pt.theta.x)
                for w in rng.uniform(0, 5, size=(5, p.m)):
                    tw = eval_theta(p, w)
                    bound = pt.value + g @ (w - pt.u)
                    assert tw.value <= bound + 1e-7 * (1 + abs(pt.value))
                cuts += 1
        # copositivity monotonicity on 200 strictly copositive pairs
        pairs = 0
        while pairs < 200:
            n = int(rng.integers(2, 6))
            Q = sym(rng, n) + rng.uniform(0, 2) * np.eye(n)
            if check_copositive(Q).status != STRICT:
                continue
            N = rng.uniform(0, 2, size=(n, n))
            assert check_copositive(Q + (N + N.T) / 2).status == STRICT
            pairs += 1
        # z^T H z = f(x)
        p = QPInstance.build(sym(rng, 4), rng.normal(size=4), 0.7)
        rel = build_copositive_relaxation(p)
        worst_rel = 0.0
        for x in rng.uniform(0, 10, size=(1000, 4)):
            z = rel.embed(x)
            fx = p.objective(x)
            err = abs(np.trace(rel.H @ np.outer(z, z)) - fx) / max(1.0, abs(fx))
            worst_rel = max(worst_rel, err)
        assert worst_rel <= 1e-10
        info.update(triples=triples, worst_concavity=f"{worst:.1e}", cuts=cuts, pairs=pairs,
                    trace_rel=f"{worst_rel:.1e}")


def test_criterion_10_constraint_counts(capsys):
    with criterion(capsys, 10, "constraint-count formulas") as info:
        rng = np.random.default_rng(1010)
        checked = 0
        for _ in range(60):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(0, 4))
            s = int(rng.integers(0, n + 1))
            a = rng.uniform(0.1, 1, size=(m, n))
            p = MixedIntegerQP.build(np.eye(n), np.zeros(n), 0.0, list(zip(a, np.ones(m))), s)
            assert miqp_to_pd(p).n_constraints == 4 * m + 2 * s
            q = int(rng.integers(1, 4))
            L = int(rng.integers(1, 3))
            mm = max(m, 1)
            a = rng.uniform(0.1, 1, size=(mm, n))  # positive rows keep the feasible set compact
            r = RobustMIQP.build(np.eye(n), 0.5, rng.normal(size=n), rng.normal(size=(L, n)),
                                 rng.uniform(size=(q, L)), list(zip(a, np.ones(mm))), s)
            rm = robust_to_ap(r, M=1.0)
            assert rm.n_constraints == 4 * (mm + q + 2) + 2 * s
            assert rm.target.n == n + q + 4
            checked += 2
        info.update(instances=checked)
