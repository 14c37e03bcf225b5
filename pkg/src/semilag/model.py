"""In-memory problem classes and their validation.

All problems live over the nonnegative orthant.  Quadratic functions are
stored as ``x^T A x + b^T x + c`` with a symmetric ``A``.  Asymmetric input is
replaced by ``(A + A^T) / 2`` (the quadratic form is unchanged) and the
correction is recorded on the instance as a warning.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, InvalidInstanceError

SYMMETRY_TOL = 0.0


def _as_matrix(M, n=None):
    M = np.array(M, dtype=float)
    if M.ndim == 0 and n in (None, 1):
        M = M.reshape(1, 1)
    if M.ndim == 1 and M.size == 1:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise DimensionError(f"expected {n}x{n} matrix, got {M.shape}")
    return M


def _as_vector(v, n=None):
    v = np.atleast_1d(np.array(v, dtype=float))
    if v.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"expected length {n}, got {v.shape[0]}")
    return v


def symmetrize(M):
    """Return ``(M + M^T)/2`` and whether that changed anything."""
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    return S, not np.array_equal(S, M)


@dataclass(frozen=True)
class QuadFunc:
    """``x -> x^T A x + b^T x + c``."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"point has shape {x.shape}, expected ({self.n},)")
        return float(x @ self.A @ x + self.b @ x + self.c)

    def values(self, X) -> np.ndarray:
        """Evaluate at every row of ``X``."""
        X = np.asarray(X, dtype=float)
        return np.einsum("ki,ij,kj->k", X, self.A, X) + X @ self.b + self.c

    def scaled(self, s: float) -> "QuadFunc":
        return QuadFunc(s * self.A, s * self.b, s * self.c)

    def is_linear(self) -> bool:
        return not np.any(self.A)

    def homogenized(self) -> np.ndarray:
        """The (n+1)x(n+1) matrix [[c, b^T/2], [b/2, A]]."""
        n = self.n
        H = np.empty((n + 1, n + 1))
        H[0, 0] = self.c
        H[0, 1:] = self.b / 2
        H[1:, 0] = self.b / 2
        H[1:, 1:] = self.A
        return H


def quad(A, b=None, c=0.0, n=None, notes=None, label="matrix") -> QuadFunc:
    """Build a :class:`QuadFunc`, symmetrizing ``A`` and logging it to ``notes``."""
    A = _as_matrix(A, n)
    n = A.shape[0]
    A, changed = symmetrize(A)
    if changed and notes is not None:
        notes.append(f"{label}: symmetrized")
    b = np.zeros(n) if b is None else _as_vector(b, n)
    return QuadFunc(A, b, float(c))


@dataclass(frozen=True)
class QPInstance:
    """min f(x) s.t. g_i(x) <= 0 (i = 0..m), x >= 0."""

    objective: QuadFunc
    constraints: tuple = ()
    name: str = ""
    warnings: tuple = ()

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        """Number of constraints, indexed 0..m-1."""
        return len(self.constraints)

    kind = "qp"

    @classmethod
    def build(cls, A, b=None, c=0.0, constraints: Sequence = (), name=""):
        """Build from raw arrays; ``constraints`` holds ``(A_i, b_i, c_i)`` triples."""
        notes: list[str] = []
        f = quad(A, b, c, notes=notes, label="objective A")
        gs = tuple(
            quad(Ai, bi, ci, n=f.n, notes=notes, label=f"constraint {i} A")
            for i, (Ai, bi, ci) in enumerate(constraints)
        )
        return cls(f, gs, name, tuple(notes))

    def lagrangian(self, u) -> QuadFunc:
        """Return L(., u) = f + sum_i u_i g_i as a single quadratic."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.m,):
            raise DimensionError(f"multiplier has shape {u.shape}, expected ({self.m},)")
        A = self.objective.A.copy()
        b = self.objective.b.copy()
        c = self.objective.c
        for ui, g in zip(u, self.constraints):
            if ui:
                A += ui * g.A
                b += ui * g.b
                c += ui * g.c
        return QuadFunc(A, b, float(c))

    def constraint_values(self, x) -> np.ndarray:
        return np.array([g(x) for g in self.constraints])

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        viol = max([0.0] + [g(x) for g in self.constraints])
        return max(viol, float(-x.min(initial=0.0)))


@dataclass(frozen=True)
class MixedIntegerQP:
    """min f(x) s.t. a_j^T x = b_j, x_i in {0,1} for i < s, x >= 0."""

    objective: QuadFunc
    a: np.ndarray  # (m, n), one row per equality
    rhs: np.ndarray  # (m,)
    s: int = 0
    name: str = ""
    warnings: tuple = ()

    kind = "miqp"

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @classmethod
    def build(cls, A, b=None, c=0.0, equalities: Sequence = (), s=0, name=""):
        notes: list[str] = []
        f = quad(A, b, c, notes=notes, label="objective A")
        a, rhs = _equality_arrays(equalities, f.n)
        return cls(f, a, rhs, int(s), name, tuple(notes))

    @property
    def binaries(self) -> range:
        return range(self.s)

    def equalities(self):
        return [(self.a[j], float(self.rhs[j])) for j in range(self.m)]


def _equality_arrays(equalities, n):
    rows, rhs = [], []
    for aj, bj in equalities:
        rows.append(_as_vector(aj, n))
        rhs.append(float(bj))
    a = np.array(rows, dtype=float).reshape(len(rows), n)
    return a, np.array(rhs, dtype=float)


@dataclass(frozen=True)
class HQPInstance:
    """min x^T A x s.t. x^T B x <= 1, x >= 0."""

    A: np.ndarray
    B: np.ndarray
    name: str = ""
    warnings: tuple = ()

    kind = "hqp"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def build(cls, A, B, name=""):
        notes: list[str] = []
        A = _as_matrix(A)
        B = _as_matrix(B)
        if A.shape != B.shape:
            raise DimensionError(f"A is {A.shape} but B is {B.shape}")
        A, ca = symmetrize(A)
        B, cb = symmetrize(B)
        if ca:
            notes.append("A: symmetrized")
        if cb:
            notes.append("B: symmetrized")
        return cls(A, B, name, tuple(notes))


@dataclass(frozen=True)
class UniformQPInstance:
    """min x^T A x + b^T x + c s.t. alpha_i x^T A x + b_i^T x + c_i <= 0, x >= 0."""

    A: np.ndarray
    b: np.ndarray
    c: float
    alphas: np.ndarray
    bs: np.ndarray  # (m+1, n)
    cs: np.ndarray
    name: str = ""
    warnings: tuple = ()

    kind = "uniform"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def build(cls, A, b=None, c=0.0, constraints: Sequence = (), name=""):
        """``constraints`` holds ``(alpha_i, b_i, c_i)`` triples."""
        notes: list[str] = []
        f = quad(A, b, c, notes=notes, label="A")
        n = f.n
        alphas = np.array([float(al) for al, _, _ in constraints])
        bs = np.array([_as_vector(bi, n) for _, bi, _ in constraints]).reshape(len(alphas), n)
        cs = np.array([float(ci) for _, _, ci in constraints])
        return cls(f.A, f.b, f.c, alphas, bs, cs, name, tuple(notes))

    def to_qp(self) -> QPInstance:
        cons = tuple(QuadFunc(al * self.A, bi.copy(), float(ci))
                     for al, bi, ci in zip(self.alphas, self.bs, self.cs))
        return QPInstance(QuadFunc(self.A, self.b, self.c), cons, self.name, self.warnings)


@dataclass(frozen=True)
class RobustMIQP:
    """Robust MIQP with polyhedral linear-cost and spectral-ball Hessian uncertainty.

    Cost vectors range over ``c0 + sum_l xi_l c_l`` with ``xi`` in the convex
    hull of the rows of ``scenarios``; the Hessian ranges over
    ``A0 + V`` with ``||V||_spec <= rho``.
    """

    a: np.ndarray
    rhs: np.ndarray
    s: int
    A0: np.ndarray
    rho: float
    c0: np.ndarray
    generators: np.ndarray  # (L, n)
    scenarios: np.ndarray  # (q, L)
    name: str = ""
    warnings: tuple = ()

    kind = "robust_miqp"

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def q(self) -> int:
        return self.scenarios.shape[0]

    @classmethod
    def build(cls, A0, rho, c0, generators, scenarios, equalities=(), s=0, name=""):
        notes: list[str] = []
        A0 = _as_matrix(A0)
        A0, changed = symmetrize(A0)
        if changed:
            notes.append("A0: symmetrized")
        n = A0.shape[0]
        c0 = _as_vector(c0, n)
        gens = np.array(generators, dtype=float)
        if gens.size == 0:
            gens = gens.reshape(0, n)
        scen = np.array(scenarios, dtype=float)
        if scen.ndim == 1:
            scen = scen.reshape(-1, gens.shape[0]) if gens.shape[0] else scen.reshape(-1, 0)
        a, rhs = _equality_arrays(equalities, n)
        return cls(a, rhs, int(s), A0, float(rho), c0, gens, scen, name, tuple(notes))

    def scenario_costs(self) -> np.ndarray:
        """The q extreme cost vectors ``c0 + sum_l xi^(k)_l c_l`` as rows."""
        if self.generators.shape[0] == 0:
            return np.tile(self.c0, (max(self.q, 1), 1))
        return self.c0[None, :] + self.scenarios @ self.generators

    def nominal(self) -> MixedIntegerQP:
        """The deterministic MIQP with Hessian ``A0 + rho I`` and no linear cost."""
        f = QuadFunc(self.A0 + self.rho * np.eye(self.n), np.zeros(self.n), 0.0)
        return MixedIntegerQP(f, self.a.copy(), self.rhs.copy(), self.s, self.name)


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.errors or self.warnings)


def _check_sym(M, label, errs):
    if not np.all(np.isfinite(M)):
        errs.append(f"{label}: non-finite entries")
    elif not np.array_equal(M, M.T):
        errs.append(f"{label}: not symmetric")


def validate(instance) -> ValidationReport:
    """Check the type invariants of any problem class; never raises."""
    rep = ValidationReport(warnings=list(getattr(instance, "warnings", ())))
    errs = rep.errors
    if isinstance(instance, QPInstance):
        n = instance.n
        _check_sym(instance.objective.A, "objective A", errs)
        for i, g in enumerate(instance.constraints):
            if g.A.shape != (n, n) or g.b.shape != (n,):
                errs.append(f"constraint {i}: dimension mismatch")
            else:
                _check_sym(g.A, f"constraint {i} A", errs)
    elif isinstance(instance, MixedIntegerQP):
        _check_sym(instance.objective.A, "objective A", errs)
        if instance.a.shape[1] != instance.n:
            errs.append("equality rows: dimension mismatch")
        if instance.s > instance.n:
            errs.append("binary set exceeds dimension")
        if instance.s < 0:
            errs.append("binary count is negative")
    elif isinstance(instance, HQPInstance):
        if instance.A.shape != instance.B.shape:
            errs.append("A and B differ in dimension")
        else:
            _check_sym(instance.A, "A", errs)
            _check_sym(instance.B, "B", errs)
    elif isinstance(instance, UniformQPInstance):
        _check_sym(instance.A, "A", errs)
        k = len(instance.alphas)
        if instance.bs.shape != (k, instance.n) or instance.cs.shape != (k,):
            errs.append("constraint data: dimension mismatch")
    elif isinstance(instance, RobustMIQP):
        _check_sym(instance.A0, "A0", errs)
        if instance.rho < 0:
            errs.append("rho must be nonnegative")
        if instance.q < 1:
            errs.append("at least one scenario vertex is required")
        if instance.generators.ndim != 2 or instance.generators.shape[1] != instance.n:
            errs.append("generator dimension mismatch")
        elif instance.scenarios.shape[1] != instance.generators.shape[0]:
            errs.append("scenario length does not match generator count")
        if instance.a.shape[1] != instance.n:
            errs.append("equality rows: dimension mismatch")
        if instance.s > instance.n:
            errs.append("binary set exceeds dimension")
    else:
        errs.append(f"unknown instance type {type(instance).__name__}")
    return rep


def require_valid(instance):
    rep = validate(instance)
    if not rep.ok:
        raise InvalidInstanceError(rep.errors)
    return instance


def evaluate_objective(instance: QPInstance, x) -> float:
    return instance.objective(x)


def evaluate_constraint(instance: QPInstance, i: int, x) -> float:
    return instance.constraints[i](x)
