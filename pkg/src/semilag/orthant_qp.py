"""Exhaustive minimization of quadratics over the orthant and over polytopes.

Both solvers enumerate supports.  A minimizer of ``x^T Q x + q^T x`` whose
support is inclusion-minimal solves the stationarity system of its face
uniquely (otherwise the objective is constant along a null direction and
the support could be shrunk), so scanning every face finds the global
minimum whenever it is attained.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .copositivity import EPS_COP, NOT_COPOSITIVE, STRICT, UNDECIDED, check_copositive
from .exceptions import DimensionError, InfeasibleError, TooLargeError, UnboundedError
from .numkernel import lp_solve

N_MAX = 14
NONNEG_TOL = 1e-12
RAY_TOL = 1e-9
BOX_PROBE_MAX_N = 9

ATTAINED = "attained"
MINUS_INFINITY = "minus_infinity"
UNDECIDED_THETA = "undecided"


@dataclass
class ThetaResult:
    status: str
    value: float
    x: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    base: Optional[np.ndarray] = None
    ray_kind: str = ""  # "negative_curvature" | "zero_curvature"
    approximate: bool = False
    kkt_residual: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return self.status == ATTAINED

    def to_dict(self) -> dict:
        val = self.value
        return {
            "status": self.status,
            "value": val if np.isfinite(val) else ("-inf" if val < 0 else "inf"),
            "x": None if self.x is None else self.x.tolist(),
            "ray": None if self.ray is None else self.ray.tolist(),
            "ray_kind": self.ray_kind or None,
            "approximate": self.approximate,
            "kkt_residual": self.kkt_residual,
            "notes": list(self.notes),
        }


def _quad_value(Q, q, r, x):
    return float(x @ Q @ x + q @ x + r)


def _stationary_on_face(Q, q, F):
    """Least-squares solution of ``2 Q_FF y = -q_F``.

    No residual filter: every candidate is turned into a feasible point whose
    value is evaluated exactly, so spurious candidates cannot push the
    minimum below the true infimum, while a residual test can wrongly discard
    the true minimizer's face when ``Q_FF`` is badly conditioned.
    """
    QF = Q[np.ix_(F, F)]
    y, *_ = np.linalg.lstsq(QF, -0.5 * q[F], rcond=None)
    return y, QF


def _nonneg_ok(y):
    return y.min() >= -1e-9 * max(1.0, np.abs(y).max())


def kkt_residual(Q, q, x):
    """Max violation of stationarity / sign conditions at ``x >= 0``."""
    g = 2 * Q @ x + q
    free = x > 1e-10
    res = np.abs(g[free]).max(initial=0.0)
    res = max(res, float(-g[~free].min(initial=0.0)))
    return max(res, float(-x.min(initial=0.0)))


def _lex_key(active):
    return tuple(active)


def enumerate_orthant_faces(Q, q, r):
    """Best stationary point over all faces (ties go to the lexicographically smallest active set)."""
    n = Q.shape[0]
    best_val, best_x, best_active = r, np.zeros(n), tuple(range(n))
    for k in range(1, n + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            y, QF = _stationary_on_face(Q, q, F)
            if not _nonneg_ok(y):
                continue
            x = np.zeros(n)
            x[F] = np.maximum(y, 0.0)
            val = _quad_value(Q, q, r, x)
            active = tuple(i for i in range(n) if i not in F)
            if val < best_val - 1e-12 * (1 + abs(best_val)) or (
                abs(val - best_val) <= 1e-12 * (1 + abs(best_val)) and _lex_key(active) < _lex_key(best_active)
            ):
                best_val, best_x, best_active = val, x, active
    return best_val, best_x


def _face_null_directions(Q, max_n=N_MAX):
    """Nonnegative null vectors of principal submatrices (zero-curvature rays)."""
    n = Q.shape[0]
    dirs = []
    scale = 1 + np.abs(Q).max()
    for k in range(1, n + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            QF = Q[np.ix_(F, F)]
            w, V = np.linalg.eigh(QF)
            for j in np.flatnonzero(np.abs(w) <= 1e-9 * scale):
                v = V[:, j]
                if v.sum() < 0:
                    v = -v
                if v.min() >= -1e-9:
                    d = np.zeros(n)
                    d[F] = np.maximum(v, 0.0)
                    dirs.append(d / d.sum())
    return dirs


def certify_ray(Q, q, d, eps=EPS_COP):
    """True when ``t -> L(t d)`` is certified to diverge to -inf."""
    d = np.asarray(d, dtype=float)
    if d.min() < -1e-12 or d.sum() <= 0:
        return False
    d = d / d.sum()
    curv = float(d @ Q @ d)
    if curv < -eps:
        return True
    return abs(curv) <= eps and float(q @ d) < -RAY_TOL and float((Q @ d).min()) >= -RAY_TOL


def min_quadratic_box(Q, q, r, upper):
    """Exact ``min x^T Q x + q^T x + r`` over ``[0, upper]^n`` (3^n face scan)."""
    n = Q.shape[0]
    best_val, best_x = np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        F = np.flatnonzero(pattern == 2)
        U = np.flatnonzero(pattern == 1)
        x = np.zeros(n)
        x[U] = upper
        if len(F):
            rhs_q = q[F] + 2 * Q[np.ix_(F, U)] @ x[U]
            y, _ = _stationary_on_face(Q, rhs_q_full(q, F, rhs_q, n), F)
            if not _nonneg_ok(y) or y.max() > upper * (1 + 1e-12):
                continue
            x[F] = np.clip(y, 0.0, upper)
        val = _quad_value(Q, q, r, x)
        if val < best_val:
            best_val, best_x = val, x
    return best_val, best_x


def rhs_q_full(q, F, qF, n):
    out = np.array(q, dtype=float).copy()
    out[F] = qF
    return out


def min_quadratic_orthant(Q, q, r=0.0, eps_cop=EPS_COP, n_max=N_MAX, copositivity=None) -> ThetaResult:
    """Minimize ``x^T Q x + q^T x + r`` over ``x >= 0``.

    Returns the attained minimum with its minimizer, ``-inf`` with a certifying
    ray, or ``undecided`` when the copositive-boundary case cannot be settled.
    A precomputed copositivity verdict for ``Q`` may be passed in.
    """
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or q.shape != (n,):
        raise DimensionError(f"inconsistent shapes Q{Q.shape}, q{q.shape}")
    if n > n_max:
        raise TooLargeError(f"n = {n} exceeds the face-enumeration limit {n_max}")
    r = float(r)
    if n == 0:
        return ThetaResult(ATTAINED, r, np.zeros(0))
    cop = copositivity if copositivity is not None else check_copositive(Q, eps=eps_cop)
    if cop.status == NOT_COPOSITIVE:
        d = cop.witness / cop.witness.sum()
        return ThetaResult(MINUS_INFINITY, -np.inf, ray=d, base=np.zeros(n), ray_kind="negative_curvature")
    if cop.status == UNDECIDED:
        return ThetaResult(UNDECIDED_THETA, np.nan, notes=["copositivity undecided"])

    best_val, best_x = enumerate_orthant_faces(Q, q, r)
    if cop.status != STRICT:
        candidates = list(cop.zero_directions)
        if cop.witness is not None:
            candidates.insert(0, cop.witness)
        candidates += _face_null_directions(Q)
        for d in candidates:
            if certify_ray(Q, q, d, eps_cop):
                d = d / d.sum()
                return ThetaResult(MINUS_INFINITY, -np.inf, ray=d, base=np.zeros(n), ray_kind="zero_curvature")
        if n > BOX_PROBE_MAX_N:
            return ThetaResult(UNDECIDED_THETA, np.nan, x=best_x,
                               notes=["zero-curvature rays present; box probe skipped (n too large)"])
        probes = [min_quadratic_box(Q, q, r, 10.0 ** k) for k in (2, 4, 6)]
        vals = [v for v, _ in probes]
        if vals[1] < vals[0] - 1 and vals[2] < vals[1] - 1:
            x6 = probes[2][1]
            if x6.sum() > 0 and certify_ray(Q, q, x6):
                d = x6 / x6.sum()
                return ThetaResult(MINUS_INFINITY, -np.inf, ray=d, base=np.zeros(n), ray_kind="zero_curvature")
            return ThetaResult(UNDECIDED_THETA, np.nan, x=best_x,
                               notes=[f"box probe keeps decreasing: {vals}"])
        if vals[2] < best_val - 1e-7 * (1 + abs(best_val)):
            best_val, best_x = vals[2], probes[2][1]
    best_val, best_x = _polish_bounded(Q, q, r, best_val, best_x)
    return ThetaResult(ATTAINED, best_val, x=best_x, kkt_residual=kkt_residual(Q, q, best_x))


def _polish_bounded(Q, q, r, val, x):
    """Bound-constrained local descent from the enumerated winner; kept only if lower.

    Guards against round-off in face solves of badly conditioned matrices.
    """
    from scipy.optimize import minimize

    res = minimize(lambda y: y @ Q @ y + q @ y, x, jac=lambda y: 2 * Q @ y + q,
                   bounds=[(0, None)] * len(x), method="L-BFGS-B",
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 200})
    y = np.maximum(res.x, 0.0)
    v = _quad_value(Q, q, r, y)
    if v < val:
        return v, y
    return val, x


def _equality_arrays(equalities, n):
    if isinstance(equalities, tuple) and len(equalities) == 2 and isinstance(equalities[0], np.ndarray) \
            and equalities[0].ndim == 2:
        A, b = equalities
        return np.asarray(A, float).reshape(-1, n), np.asarray(b, float)
    rows = [np.asarray(a, float) for a, _ in equalities]
    rhs = [float(b) for _, b in equalities]
    return np.array(rows).reshape(len(rows), n), np.array(rhs)


def polytope_is_bounded(A, b):
    """Return "infeasible" | "unbounded" | "bounded" for ``{x>=0 : A x = b}``."""
    n = A.shape[1]
    res = lp_solve(np.ones(n), [(A[j], b[j]) for j in range(A.shape[0])], sense="max")
    if res.status == "optimal":
        return "bounded"
    return res.status


def min_quadratic_polytope(Q, q, r=0.0, equalities=(), n_max=N_MAX, check_bounded=True) -> ThetaResult:
    """Minimize ``x^T Q x + q^T x + r`` over ``{x >= 0 : a_j^T x = b_j}`` (bounded)."""
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    n = Q.shape[0]
    if q.shape != (n,):
        raise DimensionError(f"inconsistent shapes Q{Q.shape}, q{q.shape}")
    if n > n_max:
        raise TooLargeError(f"n = {n} exceeds the face-enumeration limit {n_max}")
    A, b = _equality_arrays(equalities, n)
    m = A.shape[0]
    if check_bounded:
        status = polytope_is_bounded(A, b)
        if status == "infeasible":
            raise InfeasibleError("polytope is empty")
        if status == "unbounded":
            raise UnboundedError("polytope is unbounded")
    scale = 1 + np.abs(b).max(initial=0.0) + np.abs(A).max(initial=0.0)
    best_val, best_x, best_active = np.inf, None, None
    if m == 0 or np.allclose(b, 0.0, atol=1e-12):
        best_val, best_x, best_active = float(r), np.zeros(n), tuple(range(n))
    for k in range(1, n + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            K = np.zeros((k + m, k + m))
            K[:k, :k] = 2 * Q[np.ix_(F, F)]
            K[:k, k:] = A[:, F].T
            K[k:, :k] = A[:, F]
            rhs = np.concatenate([-q[F], b])
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            y = sol[:k]
            # only feasibility is filtered; see _stationary_on_face for why
            if not _nonneg_ok(y):
                continue
            x = np.zeros(n)
            x[F] = np.maximum(y, 0.0)
            if m and np.abs(A @ x - b).max() > 1e-8 * scale:
                continue
            val = _quad_value(Q, q, r, x)
            active = tuple(i for i in range(n) if i not in F)
            tie = 1e-12 * (1 + abs(val))
            if best_x is None or val < best_val - tie or (abs(val - best_val) <= tie and active < best_active):
                best_val, best_x, best_active = val, x, active
    if best_x is not None:
        return ThetaResult(ATTAINED, best_val, x=best_x)
    return _vertex_fallback(Q, q, r, A, b)


def _vertex_fallback(Q, q, r, A, b):
    from .numkernel import polytope_vertices

    V = polytope_vertices(A, b)
    if V.shape[0] == 0:
        raise InfeasibleError("polytope has no vertices")
    pts = [v for v in V]
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            pts.append(0.5 * (V[i] + V[j]))
    vals = [_quad_value(Q, q, r, p) for p in pts]
    k = int(np.argmin(vals))
    return ThetaResult(ATTAINED, vals[k], x=pts[k], approximate=True,
                       notes=["no stationary face point found; vertex/midpoint fallback"])
