"""Dense numeric primitives: Jacobi eigensolver, LU solves, a small LP solver.

Everything here is meant for desk-scale problems (n up to a few dozen).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionError, NonFiniteError, NonSymmetricError

EIG_TOL = 1e-10
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, unit norm

    def pairs(self):
        for k in range(len(self.eigenvalues)):
            yield self.eigenvalues[k], self.eigenvectors[:, k]


def sym_eig(A, tol=EIG_TOL, max_sweeps=100) -> EigenDecomposition:
    """Eigen-decompose a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected square matrix, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("matrix has non-finite entries")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * (1 + np.abs(A).max(initial=0))):
        raise NonSymmetricError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    target = tol * 1e-3 * (1.0 + scale)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # summed directly: ||A||^2 - ||diag||^2 cancels catastrophically near convergence
        off = np.sqrt(np.sum(A[mask] ** 2))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J, J rotating the (p, q) plane
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    V = V[:, order]
    V /= np.linalg.norm(V, axis=0)
    return EigenDecomposition(w[order], V)


def lu_factor(M):
    """LU with partial pivoting; returns (LU, perm) or None when singular."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    perm = np.arange(n)
    biggest = 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(M[k:, k])))
        piv = abs(M[p, k])
        biggest = max(biggest, piv)
        if piv <= PIVOT_TOL * max(biggest, 1e-300) or piv == 0.0:
            return None
        if p != k:
            M[[k, p]] = M[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        M[k + 1:, k] /= M[k, k]
        M[k + 1:, k + 1:] -= np.outer(M[k + 1:, k], M[k, k + 1:])
    return M, perm


def solve_linear(M, rhs) -> Optional[np.ndarray]:
    """Solve ``M x = rhs``; returns ``None`` when ``M`` is (numerically) singular."""
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or rhs.shape != (M.shape[0],):
        raise DimensionError(f"cannot solve {M.shape} system with rhs {rhs.shape}")
    fac = lu_factor(M)
    if fac is None:
        return None
    LU, perm = fac
    n = len(rhs)
    y = rhs[perm].copy()
    for i in range(n):
        y[i] -= LU[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - LU[i, i + 1:] @ y[i + 1:]) / LU[i, i]
    return y


@dataclass
class LPResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: float = float("nan")
    x: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0


class _Simplex:
    """Revised simplex on ``min c^T x, A x = b, x >= 0`` with Bland's rule."""

    def __init__(self, A, b, tol=1e-10, max_iter=50_000):
        self.A = A
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def run(self, c, basis, allowed):
        """Iterate from a feasible ``basis``; returns (status, basis, ray)."""
        A, b, tol = self.A, self.b, self.tol
        m, N = A.shape
        basis = list(basis)
        while self.iterations < self.max_iter:
            self.iterations += 1
            B = A[:, basis]
            xB = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
            reduced = c - A.T @ y
            entering = -1
            in_basis = set(basis)
            for j in range(N):  # Bland: lowest index with negative reduced cost
                if allowed[j] and j not in in_basis and reduced[j] < -tol:
                    entering = j
                    break
            if entering < 0:
                return "optimal", basis, None
            d = np.linalg.solve(B, A[:, entering])
            best, leave = np.inf, -1
            for i in range(m):
                if d[i] > tol:
                    ratio = max(xB[i], 0.0) / d[i]
                    if ratio < best - 1e-14 or (abs(ratio - best) <= 1e-14 and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave < 0:
                ray = np.zeros(N)
                ray[entering] = 1.0
                ray[basis] = -d
                return "unbounded", basis, ray
            basis[leave] = entering
        raise RuntimeError("simplex iteration limit reached")


def lp_solve(c, equalities=(), inequalities=(), sense="min", tol=1e-10) -> LPResult:
    """Solve an LP over ``x >= 0``.

    ``equalities`` holds ``(a_j, b_j)`` pairs meaning ``a_j^T x = b_j``;
    ``inequalities`` holds pairs meaning ``a_j^T x <= b_j``.  Two-phase revised
    simplex with Bland's rule, so no cycling.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    rows, rhs, n_slack = [], [], len(inequalities)
    for k, (aj, bj) in enumerate(list(equalities) + list(inequalities)):
        aj = np.asarray(aj, dtype=float)
        if aj.shape != (n,):
            raise DimensionError(f"constraint row has shape {aj.shape}, expected ({n},)")
        row = np.zeros(n + n_slack)
        row[:n] = aj
        if k >= len(equalities):
            row[n + k - len(equalities)] = 1.0
        rows.append(row)
        rhs.append(float(bj))
    sign = 1.0 if sense == "min" else -1.0
    if sense not in ("min", "max"):
        raise ValueError(f"unknown sense {sense!r}")
    N0 = n + n_slack
    cost = np.zeros(N0)
    cost[:n] = sign * c
    if not rows:
        if np.any(cost < -tol):
            ray = np.zeros(n)
            ray[int(np.argmax(cost < -tol))] = 1.0
            return LPResult("unbounded", -sign * np.inf, ray=ray)
        return LPResult("optimal", 0.0, x=np.zeros(n))

    A = np.array(rows)
    b = np.array(rhs)
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    m = A.shape[0]
    scale = max(1.0, np.abs(A).max(), np.abs(b).max())
    # phase 1: artificials n0..n0+m-1
    A1 = np.hstack([A, np.eye(m)])
    solver = _Simplex(A1, b, tol=tol)
    c1 = np.concatenate([np.zeros(N0), np.ones(m)])
    allowed = np.ones(N0 + m, dtype=bool)
    status, basis, _ = solver.run(c1, list(range(N0, N0 + m)), allowed)
    xB = np.linalg.solve(A1[:, basis], b)
    if c1[basis] @ xB > 1e-9 * scale:
        return LPResult("infeasible", iterations=solver.iterations)
    # drive zero-level artificials out, dropping redundant rows
    keep_rows = list(range(m))
    for pos in range(m):
        if basis[pos] < N0:
            continue
        Binv_row = np.linalg.solve(A1[:, basis].T, np.eye(m)[pos])
        swapped = False
        for j in range(N0):
            if j not in basis and abs(Binv_row @ A1[:, j]) > 1e-9:
                basis[pos] = j
                swapped = True
                break
        if not swapped:
            keep_rows.remove(pos)
    # a redundant row keeps its artificial in the basis; drop both
    basis = [basis[p] for p in keep_rows]
    A2, b2 = A[keep_rows], b[keep_rows]
    solver2 = _Simplex(A2, b2, tol=tol)
    solver2.iterations = solver.iterations
    status, basis, ray = solver2.run(cost, basis, np.ones(N0, dtype=bool))
    if status == "unbounded":
        return LPResult("unbounded", -sign * np.inf, ray=ray[:n], iterations=solver2.iterations)
    x = np.zeros(N0)
    x[basis] = np.linalg.solve(A2[:, basis], b2)
    x[np.abs(x) < 1e-13] = 0.0
    return LPResult("optimal", float(c @ x[:n]), x=x[:n], iterations=solver2.iterations)


def polytope_vertices(A_eq, b_eq, tol=1e-10) -> np.ndarray:
    """Vertices of ``{x >= 0 : A_eq x = b_eq}`` by enumerating basic solutions.

    Returns an array with one vertex per row (possibly empty).
    """
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.asarray(b_eq, dtype=float)
    m, n = A_eq.shape
    # drop dependent rows
    Q, R, piv = _qr_pivot(A_eq.T)
    rank = int(np.sum(np.abs(np.diag(R)) > 1e-10 * max(1.0, np.abs(R).max(initial=0))))
    rows = sorted(piv[:rank])
    A = A_eq[rows]
    b = b_eq[rows]
    verts = []
    for cols in itertools.combinations(range(n), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -tol):
            x = np.zeros(n)
            x[list(cols)] = np.maximum(xb, 0.0)
            if np.allclose(A_eq @ x, b_eq, atol=1e-8):
                verts.append(x)
    if rank == 0:
        if np.allclose(b_eq, 0):
            verts.append(np.zeros(n))
    if not verts:
        return np.zeros((0, n))
    V = np.array(verts)
    uniq = [V[0]]
    for v in V[1:]:
        if all(np.max(np.abs(v - w)) > 1e-9 for w in uniq):
            uniq.append(v)
    return np.array(uniq)


def _qr_pivot(M):
    from scipy.linalg import qr

    if M.size == 0:
        return None, np.zeros((0, 0)), np.arange(M.shape[1])
    return qr(M, mode="economic", pivoting=True)
