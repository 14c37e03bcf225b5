"""Copositivity tests on the nonnegative orthant and on polyhedral subcones.

The sign of ``mu* = min{x^T Q x : x in the unit simplex}`` decides everything:
``mu* > 0`` strictly copositive, ``mu* >= 0`` copositive.  The main engine is
simplicial branch-and-bound: on a simplex with vertices ``v_1..v_n`` the
value ``min_ij v_i^T Q v_j`` bounds ``x^T Q x`` from below and every vertex
value bounds ``mu*`` from above.  Simplices are split at the midpoint of
their longest edge while the bounds straddle the tolerance band.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DimensionError, NonFiniteError, NonSymmetricError
from .numkernel import polytope_vertices

EPS_COP = 1e-9
EXACT_MAX_N = 12

STRICT = "strictly_copositive"
NOT_STRICT = "copositive_not_strict"
NOT_COPOSITIVE = "not_copositive"
UNDECIDED = "undecided"


@dataclass
class CopositivityVerdict:
    status: str
    witness: Optional[np.ndarray] = None
    certified_min: float = -np.inf
    witness_value: float = np.nan
    method: str = "bnb"
    nodes: int = 0
    trivial_cone: bool = False
    zero_directions: list = field(default_factory=list)

    @property
    def copositive(self) -> bool:
        return self.status in (STRICT, NOT_STRICT)

    @property
    def strict(self) -> bool:
        return self.status == STRICT

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": None if self.witness is None else self.witness.tolist(),
            "witness_value": None if np.isnan(self.witness_value) else self.witness_value,
            "certified_min": self.certified_min,
            "method": self.method,
            "nodes": self.nodes,
            "trivial_cone": self.trivial_cone,
        }


def _checked(Q):
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionError(f"expected square matrix, got {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise NonFiniteError("matrix has non-finite entries")
    if not np.array_equal(Q, Q.T):
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * (1 + np.abs(Q).max())):
            raise NonSymmetricError("matrix is not symmetric")
        Q = 0.5 * (Q + Q.T)
    return Q


def _polish(Q, x):
    """Exact stationary point of the quadratic on the face spanned by supp(x)."""
    F = np.flatnonzero(x > 1e-7)
    if len(F) < 2:
        return x, float(x @ Q @ x)
    sol = _face_stationary(Q, F)
    best = float(x @ Q @ x)
    if sol is not None and sol[1] < best:
        y = np.zeros_like(x)
        y[F] = sol[0]
        return y, float(y @ Q @ y)
    return x, best


def _face_stationary(Q, F):
    """Solve Q_FF y = lam 1, sum(y) = 1; return (y, value) if y >= 0."""
    k = len(F)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Q[np.ix_(F, F)]
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    y = sol[:k]
    if y.min() < -1e-12:
        return None
    y = np.maximum(y, 0.0)
    y /= y.sum()
    QF = Q[np.ix_(F, F)]
    return y, float(y @ QF @ y)


def _local_search(Q):
    """Cheap upper bound on mu*: vertices, edges, replicator dynamics, polish."""
    n = Q.shape[0]
    diag = np.diag(Q)
    i = int(np.argmin(diag))
    best_x = np.zeros(n)
    best_x[i] = 1.0
    best = float(diag[i])
    if n >= 2:
        I, J = np.triu_indices(n, 1)
        qii, qjj, qij = diag[I], diag[J], Q[I, J]
        curv = qii - 2 * qij + qjj
        slope = 2 * (qij - qii)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(curv > 0, np.clip(-slope / (2 * curv), 0.0, 1.0), 0.0)
        vals = qii + slope * t + curv * t * t
        k = int(np.argmin(vals))
        if vals[k] < best:
            best = float(vals[k])
            best_x = np.zeros(n)
            best_x[I[k]] = 1 - t[k]
            best_x[J[k]] = t[k]
    P = Q.max() - Q + 1.0
    starts = [np.full(n, 1.0 / n), 0.5 * best_x + 0.5 / n]
    for x in starts:
        for _ in range(150):
            y = P @ x
            x = x * y / (x @ y)
        x, v = _polish(Q, x)
        if v < best:
            best, best_x = v, x
    best_x, best = _polish(Q, best_x)
    return best, best_x


def simplex_minimum_exact(Q):
    """Global ``min x^T Q x`` over the unit simplex by support enumeration.

    A minimizer with inclusion-minimal support solves the bordered system
    ``Q_FF y = lam 1, 1^T y = 1`` uniquely, so scanning all supports with a
    nonsingular bordered matrix and a nonnegative solution finds it.
    Returns ``(value, minimizer, near_minimizers)``.
    """
    Q = _checked(Q)
    n = Q.shape[0]
    best, best_x = np.inf, None
    found = []
    for k in range(1, n + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            sol = _face_stationary(Q, F)
            if sol is None:
                continue
            y, v = sol
            x = np.zeros(n)
            x[F] = y
            found.append((v, x))
            if v < best:
                best, best_x = v, x
    near = [x for v, x in found if v <= best + 1e-12 * (1 + abs(best))]
    return best, best_x, near


def _verdict_from_value(mu, x, eps, method, nodes=0, near=()):
    zero_dirs = [d for d in near] if abs(mu) <= eps else []
    if mu < -eps:
        return CopositivityVerdict(NOT_COPOSITIVE, x, mu, mu, method, nodes)
    if mu <= eps:
        return CopositivityVerdict(NOT_STRICT, x, mu, mu, method, nodes, zero_directions=zero_dirs)
    return CopositivityVerdict(STRICT, None, mu, np.nan, method, nodes)


def check_copositive(Q, eps=EPS_COP, max_depth=40, max_nodes=3000, exact_fallback=True):
    """Classify a symmetric matrix as strictly / non-strictly / not copositive.

    ``undecided`` is returned only if branch-and-bound exhausts ``max_depth``
    (or the node budget) and the exact support enumeration is unavailable
    (``exact_fallback=False`` or n above ``EXACT_MAX_N``).
    """
    Q = _checked(Q)
    n = Q.shape[0]
    if n == 0:
        return CopositivityVerdict(STRICT, certified_min=np.inf, method="trivial")
    if n == 1:
        return _verdict_from_value(float(Q[0, 0]), np.ones(1), eps, "scalar", near=[np.ones(1)])

    lb_all = float(Q.min())
    ub, x_ub = _local_search(Q)
    if ub < -eps:
        return CopositivityVerdict(NOT_COPOSITIVE, x_ub, lb_all, ub, "local_search")
    if lb_all > eps:
        return CopositivityVerdict(STRICT, None, lb_all, np.nan, "nonnegative")
    if lb_all >= -eps and ub <= eps:
        return CopositivityVerdict(NOT_STRICT, x_ub, lb_all, ub, "nonnegative", zero_directions=[x_ub])
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    if lam_min / n > eps:
        return CopositivityVerdict(STRICT, None, lam_min / n, np.nan, "psd")

    verdict = _simplicial_bnb(Q, eps, max_depth, max_nodes, ub, x_ub)
    if verdict.status == UNDECIDED and exact_fallback and n <= EXACT_MAX_N:
        mu, x, near = simplex_minimum_exact(Q)
        if mu > ub:  # the heuristic point is still a valid upper bound
            mu, x = ub, x_ub
        out = _verdict_from_value(mu, x, eps, "bnb+support_enumeration", verdict.nodes, near)
        return out
    return verdict


def _simplicial_bnb(Q, eps, max_depth, max_nodes, ub, x_ub):
    n = Q.shape[0]
    counter = itertools.count()
    root_V = np.eye(n)
    heap = [(float(Q.min()), next(counter), 0, root_V, Q.copy())]
    min_leaf = np.inf
    undecided = False
    zero_dirs = []
    nodes = 0
    while heap:
        lb, _, depth, V, G = heapq.heappop(heap)
        nodes += 1
        if lb > eps or (lb >= -eps and ub <= eps):
            min_leaf = min(min_leaf, lb)
            continue
        if depth >= max_depth or nodes >= max_nodes:
            undecided = True
            min_leaf = min(min_leaf, lb)
            continue
        # longest edge among vertex pairs
        diff = V[:, :, None] - V[:, None, :]
        lengths = np.einsum("kij,kij->ij", diff, diff)
        a, b = np.unravel_index(int(np.argmax(lengths)), lengths.shape)
        w = 0.5 * (V[:, a] + V[:, b])
        gw = 0.5 * (G[:, a] + G[:, b])
        gww = 0.25 * (G[a, a] + 2 * G[a, b] + G[b, b])
        if gww < ub:
            ub, x_ub = float(gww), w.copy()
            if ub < -eps:
                return CopositivityVerdict(NOT_COPOSITIVE, x_ub, min(min_leaf, lb), ub, "bnb", nodes)
        if abs(gww) <= eps and len(zero_dirs) < 32:
            zero_dirs.append(w.copy())
        for repl in (a, b):
            V2 = V.copy()
            V2[:, repl] = w
            G2 = G.copy()
            G2[:, repl] = gw
            G2[repl, :] = gw
            G2[repl, repl] = gww
            heapq.heappush(heap, (float(G2.min()), next(counter), depth + 1, V2, G2))
    if undecided:
        return CopositivityVerdict(UNDECIDED, x_ub, min_leaf, ub, "bnb", nodes)
    if ub <= eps:
        return CopositivityVerdict(NOT_STRICT, x_ub, min_leaf, ub, "bnb", nodes,
                                   zero_directions=[x_ub] + zero_dirs)
    return CopositivityVerdict(STRICT, None, min_leaf, np.nan, "bnb", nodes)


def decide_copositive(Q, eps=EPS_COP, **kw):
    """Like :func:`check_copositive`, retrying once at depth 60 if undecided."""
    v = check_copositive(Q, eps=eps, max_depth=40, **kw)
    if v.status == UNDECIDED:
        v = check_copositive(Q, eps=eps, max_depth=60, **kw)
    return v


def cone_slice_vertices(n, equalities=None, zero_idx=()):
    """Vertices of ``{d >= 0 : a_j^T d = 0, d_i = 0 (i in zero_idx), sum d = 1}``."""
    rows = []
    if equalities is not None:
        for a in np.atleast_2d(np.asarray(equalities, dtype=float)):
            if a.size:
                rows.append(a)
    for i in zero_idx:
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(e)
    rows.append(np.ones(n))
    A = np.array(rows)
    b = np.zeros(len(rows))
    b[-1] = 1.0
    return polytope_vertices(A, b)


def check_copositive_on_cone(Q, equalities=None, zero_idx=(), eps=EPS_COP, **kw):
    """Copositivity of ``Q`` on ``{d >= 0 : a_j^T d = 0, d_i = 0 for i in zero_idx}``.

    The cone slice by ``sum d = 1`` is a polytope with vertices ``v_1..v_p``;
    every point is ``V lam`` with ``lam`` in the p-simplex, so the question
    reduces to copositivity of the Gram matrix ``V^T Q V``.
    """
    Q = _checked(Q)
    n = Q.shape[0]
    V = cone_slice_vertices(n, equalities, zero_idx)
    if V.shape[0] == 0:
        return CopositivityVerdict(STRICT, None, np.inf, np.nan, "trivial_cone", trivial_cone=True)
    G = V @ Q @ V.T
    G = 0.5 * (G + G.T)
    v = decide_copositive(G, eps=eps, **kw)
    if v.witness is not None:
        v.witness = V.T @ v.witness
        v.witness_value = float(v.witness @ Q @ v.witness)
    v.zero_directions = [V.T @ d for d in v.zero_directions]
    v.method = "cone_vertices+" + v.method
    return v
