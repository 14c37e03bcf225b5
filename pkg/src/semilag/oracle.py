"""Brute-force primal solvers and image-set membership tests (ground truth for tests)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .copositivity import STRICT, check_copositive, simplex_minimum_exact
from .exceptions import InfeasibleError, PreconditionError, TooLargeError, UnboundedError
from .model import QPInstance
from .numkernel import lp_solve
from .orthant_qp import min_quadratic_polytope, polytope_is_bounded

FEAS_TOL = 1e-9
MEMBER = "member"
NON_MEMBER = "non_member"
UNDECIDED = "undecided"


@dataclass
class PrimalResult:
    value: float
    argmin: Optional[np.ndarray] = None
    method: str = ""
    error_bar: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not (np.isinf(self.value) and self.value > 0)

    def to_dict(self) -> dict:
        v = self.value
        return {
            "value": v if np.isfinite(v) else ("inf" if v > 0 else "-inf"),
            "argmin": None if self.argmin is None else self.argmin.tolist(),
            "method": self.method,
            "error_bar": self.error_bar,
            "flags": list(self.flags),
        }


# ---------------------------------------------------------------- mixed-integer

def _restrict(Q, q, c, fixed_idx, fixed_val, free_idx):
    """Substitute fixed coordinates into x^T Q x + q^T x + c."""
    v = np.asarray(fixed_val, dtype=float)
    Qff = Q[np.ix_(free_idx, free_idx)]
    qf = q[free_idx] + 2 * Q[np.ix_(free_idx, fixed_idx)] @ v
    cf = float(v @ Q[np.ix_(fixed_idx, fixed_idx)] @ v + q[fixed_idx] @ v + c)
    return Qff, qf, cf


def _solve_pattern(Q, q, c, a, rhs, fixed_idx, pattern, n):
    free = [i for i in range(n) if i not in set(fixed_idx)]
    Qf, qf, cf = _restrict(Q, q, c, list(fixed_idx), pattern, free)
    rf = rhs - (a[:, fixed_idx] @ np.asarray(pattern) if len(fixed_idx) else 0.0)
    af = a[:, free]
    x = np.zeros(n)
    x[list(fixed_idx)] = pattern
    if not free:
        if len(rf) and np.abs(rf).max() > FEAS_TOL:
            return None
        return cf, x
    try:
        res = min_quadratic_polytope(Qf, qf, cf, (af, rf) if len(rf) else ())
    except InfeasibleError:
        return None
    x[free] = res.x
    return res.value, x


def solve_miqp_bruteforce(p, max_s=20) -> PrimalResult:
    """Enumerate binary patterns; solve each continuous restriction exactly."""
    if p.s > max_s:
        raise TooLargeError(f"s = {p.s} exceeds {max_s}")
    f = p.objective
    best, best_x = np.inf, None
    flags = []
    if p.m == 0 and p.n > p.s:
        raise PreconditionError("continuous part unbounded without equalities")
    for pattern in itertools.product((0.0, 1.0), repeat=p.s):
        try:
            out = _solve_pattern(f.A, f.b, f.c, p.a, p.rhs, list(range(p.s)), pattern, p.n)
        except UnboundedError:
            raise PreconditionError(f"continuous polytope unbounded for binary pattern {pattern}")
        if out is None:
            continue
        val, x = out
        if val < best - 1e-12:
            best, best_x = val, x
    if best_x is None:
        flags.append("infeasible")
    return PrimalResult(best, best_x, "binary-enumeration", 0.0, flags)


def solve_robust_bruteforce(p) -> PrimalResult:
    """min x^T (A0 + rho I) x + max_k c_k^T x over the mixed-integer feasible set.

    For each binary pattern and each scenario k the region where k attains the
    max is a polytope, so the piecewise problem splits into exact polytope QPs.
    """
    from .certificates import check_robust_cone

    if check_robust_cone(p).verdict != "holds":
        raise PreconditionError("feasible set not certified compact")
    n, s = p.n, p.s
    Q = p.A0 + p.rho * np.eye(n)
    costs = p.scenario_costs()[: max(p.q, 1)]
    K = len(costs)
    best, best_x = np.inf, None
    for pattern in itertools.product((0.0, 1.0), repeat=s):
        for k in range(K):
            # variables (x, slack_j for j != k):  (c_j - c_k)^T x + slack_j = 0
            others = [j for j in range(K) if j != k]
            N = n + len(others)
            QQ = np.zeros((N, N))
            QQ[:n, :n] = Q
            qq = np.zeros(N)
            qq[:n] = costs[k]
            rows = [np.concatenate([p.a[j], np.zeros(len(others))]) for j in range(p.m)]
            rhs = list(p.rhs)
            for t, j in enumerate(others):
                r = np.zeros(N)
                r[:n] = costs[j] - costs[k]
                r[n + t] = 1.0
                rows.append(r)
                rhs.append(0.0)
            A_eq = np.array(rows).reshape(len(rows), N)
            out = _solve_pattern(QQ, qq, 0.0, A_eq, np.array(rhs), list(range(s)), pattern, N)
            if out is None:
                continue
            val, z = out
            if val < best - 1e-12:
                best, best_x = val, z[:n]
    if best_x is None:
        raise InfeasibleError("empty feasible set")
    return PrimalResult(best, best_x, "binary-enumeration+scenario-split")


# ---------------------------------------------------------------- continuous

def _all_linear(p: QPInstance) -> bool:
    return all(not np.any(g.A) for g in p.constraints)


def feasible_radius(p: QPInstance):
    """An l1-radius containing the feasible set, or None if none is found."""
    radii = []
    lin = [(g.b, -g.c) for g in p.constraints if not np.any(g.A)]
    if lin:
        res = lp_solve(np.ones(p.n), inequalities=lin, sense="max")
        if res.status == "optimal":
            radii.append(max(res.value, 0.0))
    for g in p.constraints:
        if not np.any(g.A) or p.n > 12:
            continue
        v = check_copositive(g.A)
        if v.status != STRICT:
            continue
        mu, _, _ = simplex_minimum_exact(g.A)
        if mu <= 0:
            continue
        beta = max(float(-g.b.min()), 0.0)
        disc = beta * beta - 4 * mu * g.c
        if disc >= 0:
            radii.append((beta + np.sqrt(disc)) / (2 * mu))
        else:
            radii.append(0.0)
    return min(radii) if radii else None


def _linear_qp(p: QPInstance) -> Optional[PrimalResult]:
    """Exact solve when every constraint is linear (slack form, face enumeration)."""
    n, m = p.n, p.m
    N = n + m
    Q = np.zeros((N, N))
    Q[:n, :n] = p.objective.A
    q = np.zeros(N)
    q[:n] = p.objective.b
    rows, rhs = [], []
    for i, g in enumerate(p.constraints):
        r = np.zeros(N)
        r[:n] = g.b
        r[n + i] = 1.0
        rows.append(r)
        rhs.append(-g.c)
    A = np.array(rows).reshape(m, N)
    b = np.array(rhs)
    status = polytope_is_bounded(A, b) if m else "unbounded"
    if status == "infeasible":
        return PrimalResult(np.inf, None, "face-enumeration", 0.0, ["infeasible"])
    if status != "bounded" or N > 14:
        return None
    res = min_quadratic_polytope(Q, q, p.objective.c, (A, b), check_bounded=False)
    return PrimalResult(res.value, res.x[:n], "face-enumeration")


def _grid(lo, hi, G):
    axes = [np.linspace(l, h, G) for l, h in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))


def _polish(p: QPInstance, x0):
    from scipy.optimize import minimize

    f = p.objective
    cons = [{"type": "ineq", "fun": (lambda x, g=g: -g(x)), "jac": (lambda x, g=g: -(2 * g.A @ x + g.b))}
            for g in p.constraints]
    try:
        res = minimize(f, x0, jac=lambda x: 2 * f.A @ x + f.b, bounds=[(0, None)] * p.n,
                       constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 300})
    except Exception:  # pragma: no cover - scipy failure is non-fatal here
        return None
    x = np.maximum(res.x, 0.0)
    return x if p.max_violation(x) <= FEAS_TOL else None


def solve_qp_bruteforce(p: QPInstance, R=None, grid_points=200_000, refinements=2) -> PrimalResult:
    """Global minimum of a small QP by exact face enumeration or refined grid search."""
    if not p.constraints or _all_linear(p):
        if p.constraints:
            out = _linear_qp(p)
            if out is not None:
                return out
    n = p.n
    if n > 4:
        raise TooLargeError("grid oracle supports n <= 4")
    flags = []
    if R is None:
        R = feasible_radius(p)
        if R is None:
            R = 10.0
            flags.append("box-truncated at R = 10")
        R = max(float(R), 1e-6)
    G = max(3, int(grid_points ** (1.0 / n)))
    lo, hi = np.zeros(n), np.full(n, float(R))
    best_val, best_x = np.inf, None
    h = R / (G - 1)
    for level in range(refinements + 1):
        X = _grid(lo, hi, G)
        viol = np.max(np.column_stack([g.values(X) for g in p.constraints] + [np.zeros(len(X))]), axis=1)
        feas = viol <= FEAS_TOL
        if feas.any():
            vals = p.objective.values(X[feas])
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val, best_x = float(vals[k]), X[feas][k].copy()
        if best_x is None:
            break
        if level < refinements:
            h = (hi[0] - lo[0]) / (G - 1)
            lo = np.maximum(best_x - 2 * h, 0.0)
            hi = best_x + 2 * h
            h = (hi[0] - lo[0]) / (G - 1)
    if best_x is None:
        return PrimalResult(np.inf, None, "grid", 0.0, flags + ["possibly infeasible"])
    x = _polish(p, best_x)
    if x is not None and p.objective(x) < best_val:
        best_val, best_x = float(p.objective(x)), x
        flags.append("polished")
    grad = 2 * p.objective.A @ best_x + p.objective.b
    err = float(np.abs(grad).sum() * h + np.abs(p.objective.A).sum() * h * h)
    return PrimalResult(best_val, best_x, "grid", err, flags)


# ---------------------------------------------------------------- membership

@dataclass
class MembershipQuery:
    target: np.ndarray
    verdict: str
    witness: Optional[np.ndarray] = None
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"target": self.target.tolist(), "verdict": self.verdict,
                "witness": None if self.witness is None else self.witness.tolist(),
                "evidence": self.evidence}


def _shifted_functions(p: QPInstance, target):
    """h_k = g_k - u_k (k < m) and h_m = f - r, as homogenized matrices."""
    funcs = [g for g in p.constraints] + [p.objective]
    out = []
    for k, g in enumerate(funcs):
        out.append((g.A.copy(), g.b.copy(), float(g.c - target[k])))
    return out


def _fix_forced_zeros(funcs, n):
    """Fix coordinates forced to zero by functions that are nonnegative on the orthant.

    If ``h`` has nonnegative Hessian entries, nonnegative linear part and
    constant 0, then ``h(x) <= 0`` forces ``x_i = 0`` wherever a diagonal or
    linear coefficient is positive; with a positive constant it is infeasible.
    Returns (infeasible, free index list).
    """
    free = list(range(n))
    changed = True
    while changed:
        changed = False
        for Q, q, c in funcs:
            Qf = Q[np.ix_(free, free)]
            qf = q[free]
            if (Qf.size and Qf.min() < 0) or (qf.size and qf.min() < 0):
                continue
            if c > 0:
                return True, free
            if c < 0:
                continue
            kill = [free[j] for j in range(len(free)) if qf[j] > 0 or Qf[j, j] > 0]
            if kill:
                free = [i for i in free if i not in kill]
                changed = True
    return False, free


def _phi(funcs, X):
    vals = [np.einsum("ij,jk,ik->i", X, Q, X) + X @ q + c for Q, q, c in funcs]
    return np.max(np.column_stack(vals), axis=1)


def _witness_search(funcs, n, seed=0):
    from scipy.optimize import minimize

    if n == 0:
        return None
    axis = np.unique(np.concatenate([np.linspace(0, 4, 17), np.logspace(-3, 3, 25), [0.0]]))
    if len(axis) ** n <= 300_000:
        X = _grid(np.zeros(n), np.zeros(n), 1)  # placeholder shape
        X = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), -1).reshape(-1, n)
    else:
        rng = np.random.default_rng(seed)
        X = axis[rng.integers(0, len(axis), size=(300_000, n))]
    ph = _phi(funcs, X)
    order = np.argsort(ph)[:6]
    best_x, best_phi = X[order[0]], ph[order[0]]
    if best_phi <= FEAS_TOL:
        return best_x
    for k in order:
        x0 = np.concatenate([X[k], [ph[k]]])
        cons = [{"type": "ineq", "fun": (lambda z, Q=Q, q=q, c=c: z[-1] - (z[:-1] @ Q @ z[:-1] + q @ z[:-1] + c)),
                 "jac": (lambda z, Q=Q, q=q: np.concatenate([-(2 * Q @ z[:-1] + q), [1.0]]))}
                for Q, q, c in funcs]
        try:
            res = minimize(lambda z: z[-1], x0, jac=lambda z: np.eye(len(z))[-1],
                           bounds=[(0, None)] * n + [(None, None)], constraints=cons,
                           method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
        except Exception:  # pragma: no cover
            continue
        x = np.maximum(res.x[:-1], 0.0)
        v = _phi(funcs, x[None, :])[0]
        if v < best_phi:
            best_x, best_phi = x, v
        if best_phi <= FEAS_TOL:
            return best_x
    return None


def _homogenize(Q, q, c):
    n = len(q)
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = Q
    H[:n, n] = H[n, :n] = 0.5 * q
    H[n, n] = c
    return H


def _interval_lower(Hs, LO, HI):
    """Lower bounds of z^T H z over boxes [LO, HI] in the nonnegative orthant (monotone)."""
    LL = LO[:, :, None] * LO[:, None, :]
    UU = HI[:, :, None] * HI[:, None, :]
    out = []
    for H in Hs:
        out.append(np.where(H > 0, H * LL, H * UU).sum(axis=(1, 2)))
    return np.column_stack(out)


def _interval_certify(funcs, n, R=4.0, max_cells=200_000):
    """Certify max_k h_k(x) > 0 on all of R^n_+ by interval branch and bound.

    Region 1 is the box [0, R]^n, handled in z = (x, 1).  Region 2 is
    ``||x||_inf >= R``: writing ``x = d / tau`` with ``max_i d_i = 1`` and
    ``tau in (0, 1/R]``, ``tau^2 h_k(x) = z^T H_k z`` for ``z = (d, tau)``.
    Cells touching ``tau = 0`` need positivity only for ``tau > 0``.
    Returns (certified, stats, candidate point or None).
    """
    Hs = [_homogenize(*f) for f in funcs]
    lin = [(f[1], f[2]) for f in funcs]
    scale = 1.0 + max(np.abs(H).max() for H in Hs)
    margin = 1e-12 * scale
    regions = []
    lo = np.zeros(n + 1)
    hi = np.concatenate([np.full(n, R), [1.0]])
    lo[n] = 1.0
    regions.append(("box", lo, hi))
    for i in range(n):
        lo = np.zeros(n + 1)
        hi = np.concatenate([np.ones(n), [1.0 / R]])
        lo[i] = 1.0
        regions.append((f"far{i}", lo, hi))
    total = 0
    for name, lo0, hi0 in regions:
        width0 = np.where(hi0 > lo0, hi0 - lo0, 1.0)
        LO, HI = lo0[None, :].copy(), hi0[None, :].copy()
        far = name != "box"
        while len(LO):
            total += len(LO)
            if total > max_cells:
                return False, {"cells": total, "stopped_in": name}, None
            lb = _interval_lower(Hs, LO, HI)
            ok = (lb > margin).any(axis=1)
            if far:
                edge = LO[:, n] == 0.0
                if edge.any():
                    # tau^2 h = A(d) + tau B(d) + tau^2 C; for tau > 0 it is positive when
                    # A >= 0 on the cell and B + tau C > 0 (or B >= 0 and C > 0)
                    Alb = _interval_lower([H[:n, :n] for H in Hs], LO[:, :n], HI[:, :n])
                    for k, (q, c) in enumerate(lin):
                        Blb = np.where(q > 0, q * LO[:, :n], q * HI[:, :n]).sum(axis=1)
                        Clb = min(c * 0.0, c * 1.0) * HI[:, n]
                        good = (Alb[:, k] >= 0) & ((Blb + Clb > 0) | ((Blb >= 0) & (c > 0)))
                        ok |= edge & good
            if not ok.all():
                # uncertified cell centres double as witness candidates
                mid = 0.5 * (LO[~ok] + HI[~ok])
                if far:
                    tau = mid[:, n]
                    pos = tau > 0
                    X = mid[pos, :n] / tau[pos, None]
                else:
                    X = mid[:, :n]
                if len(X):
                    ph = _phi(funcs, X)
                    j = int(np.argmin(ph))
                    if ph[j] <= FEAS_TOL:
                        return False, {"cells": total}, X[j]
            LO, HI = LO[~ok], HI[~ok]
            if not len(LO):
                break
            w = (HI - LO) / width0
            dim = np.argmax(w, axis=1)
            idx = np.arange(len(LO))
            cut = 0.5 * (LO[idx, dim] + HI[idx, dim])
            LO2, HI2 = LO.copy(), HI.copy()
            HI[idx, dim] = cut
            LO2[idx, dim] = cut
            LO = np.vstack([LO, LO2])
            HI = np.vstack([HI, HI2])
    return True, {"cells": total, "R": R}, None


def membership(p: QPInstance, target, max_cells=200_000, seed=0) -> MembershipQuery:
    """Decide whether ``target = (u_0..u_{m-1}, r)`` lies in the image set of ``p``.

    Member: some x >= 0 has g_i(x) <= u_i and f(x) <= r (to 1e-9).
    Non-member is only reported with an interval certificate.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (p.m + 1,):
        raise ValueError(f"target must have length {p.m + 1}")
    n = p.n
    funcs = _shifted_functions(p, target)
    infeasible, free = _fix_forced_zeros(funcs, n)
    ev = {"fixed_to_zero": [i for i in range(n) if i not in free]}
    if infeasible:
        ev["certificate"] = "forced-zero reduction leaves a positive function"
        return MembershipQuery(target, NON_MEMBER, None, ev)
    red = [(Q[np.ix_(free, free)], q[free], c) for Q, q, c in funcs]
    nf = len(free)

    def lift(y):
        x = np.zeros(n)
        x[free] = y
        return x

    if nf == 0:
        if max(c for _, _, c in red) <= FEAS_TOL:
            return MembershipQuery(target, MEMBER, np.zeros(n), ev)
        ev["certificate"] = "all coordinates forced to zero"
        return MembershipQuery(target, NON_MEMBER, None, ev)
    y = _witness_search(red, nf, seed)
    if y is not None:
        return MembershipQuery(target, MEMBER, lift(y), ev)
    if nf > 4:
        return MembershipQuery(target, UNDECIDED, None, ev)
    ok, stats, cand = _interval_certify(red, nf, max_cells=max_cells)
    ev.update(stats)
    if cand is not None:
        return MembershipQuery(target, MEMBER, lift(cand), ev)
    if ok:
        ev["certificate"] = "interval lower bounds positive on every cell"
        return MembershipQuery(target, NON_MEMBER, None, ev)
    return MembershipQuery(target, UNDECIDED, None, ev)
