"""Semi-Lagrangian dual: evaluation, cutting-plane maximization, gap reports.

The dual function keeps ``x >= 0`` inside the inner infimum,

    theta(u) = inf_{x >= 0} f(x) + sum_i u_i g_i(x),

so it is concave in ``u`` and every point ``x >= 0`` yields the affine upper
bound ``theta(u') <= f(x) + sum_i u'_i g_i(x)``.  The maximizer below collects
such cuts (at inner minimizers and along divergence rays) into a
piecewise-affine model and maximizes it by LP.
"""
from __future__ import annotations

import contextlib
import itertools
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .copositivity import EPS_COP
from .exceptions import DimensionError, WeakDualityError
from .orthant_qp import ATTAINED, MINUS_INFINITY, N_MAX, ThetaResult, min_quadratic_orthant

TOL_DUAL = 1e-6
TOL_GAP = 1e-4
EPS_RAY = 1e-6
U_CAP = 1e4
U_CAP_MAX = 1e8
MAX_ITER = 500
WEAK_DUALITY_HARD = 1e-5
MODEL_CEILING = 1e12
MIN_RADIUS = 1e-3

CONVERGED = "converged"
ITERATION_CAP = "iteration_cap"
UNBOUNDED_EVERYWHERE = "dual_unbounded_below_everywhere"
UNDECIDED_INNER = "undecided_inner"

ZERO_GAP = "zero_gap"
POSITIVE_GAP = "positive_gap"
INFINITE_GAP = "infinite_gap"
INCONCLUSIVE = "inconclusive"


@dataclass
class DualPoint:
    u: np.ndarray
    theta: ThetaResult

    @property
    def value(self) -> float:
        return self.theta.value


@dataclass
class DualResult:
    best_value: float
    best_u: Optional[np.ndarray]
    termination: str
    history: list = field(default_factory=list)  # best value after each evaluation
    points: list = field(default_factory=list)  # DualPoint per evaluation
    model_value: float = np.inf
    u_cap: float = U_CAP
    iterations: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_value": _num(self.best_value),
            "best_u": None if self.best_u is None else self.best_u.tolist(),
            "termination": self.termination,
            "model_value": _num(self.model_value),
            "u_cap": self.u_cap,
            "iterations": self.iterations,
            "history": [_num(v) for v in self.history],
            "notes": list(self.notes),
        }


@dataclass
class GapReport:
    primal_value: float
    dual_value: float
    gap: float
    classification: str
    certificates: list = field(default_factory=list)
    tol_gap: float = TOL_GAP
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "primal_value": _num(self.primal_value),
            "dual_value": _num(self.dual_value),
            "gap": _num(self.gap),
            "classification": self.classification,
            "tol_gap": self.tol_gap,
            "certificates": [c.to_dict() if hasattr(c, "to_dict") else c for c in self.certificates],
            "notes": list(self.notes),
        }


def _num(v):
    if v is None:
        return None
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def eval_theta(instance, u, eps_cop=EPS_COP, n_max=N_MAX) -> ThetaResult:
    """Evaluate the dual function at ``u >= 0`` (one multiplier per constraint)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (instance.m,):
        raise DimensionError(f"multiplier has shape {u.shape}, expected ({instance.m},)")
    if np.any(u < 0):
        raise ValueError("multipliers must be nonnegative")
    L = instance.lagrangian(u)
    return min_quadratic_orthant(L.A, L.b, L.c, eps_cop=eps_cop, n_max=n_max)


@contextlib.contextmanager
def _quiet_stdout():
    """Silence diagnostics the LP backend writes straight to file descriptor 1."""
    try:
        fd = sys.stdout.fileno()
    except (AttributeError, ValueError, OSError):
        yield
        return
    sys.stdout.flush()
    saved = os.dup(fd)
    with open(os.devnull, "w") as null:
        os.dup2(null.fileno(), fd)
        try:
            yield
        finally:
            os.dup2(saved, fd)
            os.close(saved)


class _CutModel:
    """Piecewise-affine upper model t <= c_k + g_k^T u plus linear feasibility cuts."""

    def __init__(self, k):
        self.k = k
        self.value_cuts = []  # (const, g)
        self.feas_cuts = []  # (coef, rhs) meaning coef^T u >= rhs

    def add_point_cut(self, instance, x):
        x = np.asarray(x, dtype=float)
        g = instance.constraint_values(x)
        const = instance.objective(x)
        if np.all(np.isfinite(g)) and np.isfinite(const):
            self.value_cuts.append((const, g))

    def add_ray_cut(self, instance, d, eps_ray):
        coef = np.array([d @ gi.A @ d for gi in instance.constraints])
        rhs = -float(d @ instance.objective.A @ d) + eps_ray
        self.feas_cuts.append((coef, rhs))

    def solve(self, cap, center=None, radius=None):
        """Maximize the model over [0, cap]^k, optionally intersected with an
        l-infinity ball around ``center``; returns (status, u, value)."""
        k = self.k
        cost = np.zeros(k + 1)
        cost[-1] = -1.0
        rows, rhs = [], []
        for const, g in self.value_cuts:
            rows.append(np.concatenate([-g, [1.0]]))
            rhs.append(const)
        for coef, r in self.feas_cuts:
            rows.append(np.concatenate([-coef, [0.0]]))
            rhs.append(-r)
        if center is None:
            bounds = [(0.0, cap)] * k
        else:
            bounds = [(max(0.0, c - radius), min(cap, c + radius)) for c in center]
        bounds = bounds + [(None, MODEL_CEILING)]
        A_ub = np.array(rows) if rows else None
        b_ub = np.array(rhs) if rows else None
        for method in ("highs-ds", "highs-ipm", "highs"):
            with _quiet_stdout():
                res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method=method)
            if res.status in (0, 2):
                break
        if res.status == 2:
            return "infeasible", None, -np.inf
        if res.status != 0:
            return "failed", None, np.nan
        u = np.clip(res.x[:k], 0.0, cap)
        return "optimal", u, float(res.x[-1])


def _grid_points(k, limit=243):
    pts = []
    for combo in itertools.product((0.0, 1.0, 10.0), repeat=k):
        pts.append(np.array(combo))
        if len(pts) >= limit:
            break
    return pts


def maximize_dual(instance, tol_dual=TOL_DUAL, u_cap=U_CAP, u_cap_max=U_CAP_MAX, max_iter=MAX_ITER,
                  eps_ray=EPS_RAY, eps_cop=EPS_COP, n_max=N_MAX, u0=None, stabilize=True,
                  trust_radius=10.0) -> DualResult:
    """Maximize the semi-Lagrangian dual by cutting planes.

    With ``stabilize`` the model is maximized inside an l-infinity trust
    region around the best multiplier found so far (a boxstep method);
    convergence is only declared when the model gap is below ``tol_dual``
    and the trust region does not bind, so the stopping test is the same
    as for plain Kelley.
    """
    k = instance.m
    model = _CutModel(k)
    best_val, best_u = -np.inf, None
    history, points, notes = [], [], []
    cap = float(u_cap)
    model_val = np.inf

    def record(u, th):
        nonlocal best_val, best_u
        points.append(DualPoint(u.copy(), th))
        if th.status == ATTAINED:
            model.add_point_cut(instance, th.x)
            if th.value > best_val:
                best_val, best_u = th.value, u.copy()
        elif th.status == MINUS_INFINITY:
            # the curvature cut is only valid for negative-curvature rays; a zero-curvature
            # ray diverges through its linear term, which the point cuts below capture
            if th.ray_kind != "zero_curvature":
                model.add_ray_cut(instance, th.ray, eps_ray)
            for t in (1.0, 1e2, 1e4, 1e6):
                model.add_point_cut(instance, th.base + t * th.ray)
        history.append(best_val)

    if k == 0:
        th = eval_theta(instance, np.zeros(0), eps_cop, n_max)
        record(np.zeros(0), th)
        term = CONVERGED if th.status == ATTAINED else (
            UNBOUNDED_EVERYWHERE if th.status == MINUS_INFINITY else UNDECIDED_INNER)
        return DualResult(th.value if th.status == ATTAINED else -np.inf, np.zeros(0), term, history,
                          points, th.value, cap, 1, notes)

    model.add_point_cut(instance, np.zeros(instance.n))
    u = np.zeros(k) if u0 is None else np.maximum(np.asarray(u0, dtype=float), 0.0)
    termination = ITERATION_CAP
    radius = trust_radius
    it = 0
    while it < max_iter:
        it += 1
        th = eval_theta(instance, u, eps_cop, n_max)
        record(u, th)
        if th.status not in (ATTAINED, MINUS_INFINITY):
            termination = UNDECIDED_INNER
            notes.append(f"inner problem undecided at u = {u.tolist()}")
            break
        prev_best = history[-2] if len(history) > 1 else -np.inf
        if stabilize and best_u is not None and len(history) > 1 and np.isfinite(model_val):
            # serious step: widen the trust region; null step: tighten it
            if best_val > prev_best + 0.1 * max(model_val - prev_best, 0.0) and np.isfinite(prev_best):
                radius = min(2 * radius, cap)
            elif np.isfinite(prev_best):
                radius = max(0.5 * radius, MIN_RADIUS)
        while True:
            center = best_u if (stabilize and best_u is not None) else None
            status, u_next, model_val = model.solve(cap, center, radius)
            if status != "optimal":
                break
            if best_val == -np.inf or model_val - best_val > tol_dual:
                break
            if center is not None and radius < cap:
                inside = (u_next > 0) & (u_next < cap * (1 - 1e-9))
                if np.any(inside & (np.abs(u_next - center) >= radius * (1 - 1e-9))):
                    radius = min(10 * radius, cap)  # trust region binds: look further out
                    continue
            # model converged; a maximizer on the cap boundary means the cap binds
            if np.any(u_next >= cap * (1 - 1e-9)) and cap < u_cap_max:
                cap = min(2 * cap, u_cap_max)
                radius = max(radius, cap)
                continue
            status = "converged"
            break
        if status == "converged":
            termination = CONVERGED
            break
        if status == "infeasible":
            termination = UNBOUNDED_EVERYWHERE
            notes.append("ray cuts exclude every multiplier")
            break
        if status != "optimal":
            notes.append(f"model LP failed at iteration {it}")
            break
        if th.status == MINUS_INFINITY and np.allclose(u_next, u, rtol=0, atol=1e-12):
            # the model proposes the same divergent multiplier again: no further progress
            notes.append("model stalled at a multiplier with theta = -inf")
            break
        u = u_next

    if termination in (UNDECIDED_INNER, UNBOUNDED_EVERYWHERE) or best_u is None:
        # deterministic restart probe on a coarse grid
        for g in _grid_points(k):
            th = eval_theta(instance, g, eps_cop, n_max)
            record(g, th)
        if best_u is None and all(p.theta.status == MINUS_INFINITY for p in points):
            termination = UNBOUNDED_EVERYWHERE
        elif termination == UNBOUNDED_EVERYWHERE and best_u is not None:
            notes.append("grid probe found a finite value after ray cuts closed the model")
            termination = ITERATION_CAP
    return DualResult(best_val, best_u, termination, history, points, model_val, cap, it, notes)


def classify_gap(primal_value, dual_value, tol_gap=TOL_GAP):
    if np.isnan(primal_value) or np.isnan(dual_value):
        return INCONCLUSIVE, np.nan
    if np.isinf(primal_value) and primal_value > 0:
        return INCONCLUSIVE, np.inf
    if dual_value == -np.inf:
        if primal_value == -np.inf:
            return ZERO_GAP, 0.0
        return INFINITE_GAP, np.inf
    gap = primal_value - dual_value
    if abs(gap) <= tol_gap:
        return ZERO_GAP, gap
    return POSITIVE_GAP, gap


def gap_report(instance, primal, dual: DualResult, certs=(), tol_gap=TOL_GAP) -> GapReport:
    """Compare a primal oracle value with the best dual bound."""
    pv = float(primal.value if hasattr(primal, "value") else primal)
    dv = float(dual.best_value)
    notes = []
    if np.isfinite(pv) and np.isfinite(dv) and dv > pv + WEAK_DUALITY_HARD:
        raise WeakDualityError(f"dual bound {dv} exceeds primal value {pv}")
    cls, gap = classify_gap(pv, dv, tol_gap)
    if dual.termination == UNDECIDED_INNER and cls != ZERO_GAP:
        cls = INCONCLUSIVE
        notes.append("dual maximization stopped on an undecided inner problem")
    if cls == POSITIVE_GAP and dual.termination != CONVERGED:
        notes.append(f"dual not converged ({dual.termination}); gap is an upper estimate")
    return GapReport(pv, dv, gap, cls, list(certs), tol_gap, notes)
