"""Problem transformations: MIQP -> all-quadratic QP, robust MIQP -> lifted MIQP,
HQP -> QP, and the homogenized matrices of the copositive relaxation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .copositivity import STRICT, check_copositive
from .exceptions import InfeasibleError, PreconditionError
from .model import HQPInstance, MixedIntegerQP, QPInstance, QuadFunc, RobustMIQP
from .numkernel import lp_solve

PD_FAMILIES = ("linear_le", "linear_ge", "square_le", "square_ge", "binary_le", "binary_ge")


@dataclass
class ReformulationMap:
    source_kind: str
    target: QPInstance
    variable_map: dict
    provenance: list  # one {"family", "source_index"} per target constraint
    miqp: MixedIntegerQP | None = None  # intermediate mixed-integer form, when there is one
    data: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def n_constraints(self) -> int:
        return self.target.m

    def to_dict(self) -> dict:
        data = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.data.items()}
        return {
            "source_kind": self.source_kind,
            "variable_map": self.variable_map,
            "provenance": self.provenance,
            "data": data,
            "diagnostics": list(self.diagnostics),
        }


def pd_constraints(a, rhs, s):
    """Expand ``a_j^T x = b_j`` and ``x_i in {0,1}`` (i < s) into the six quadratic families.

    Returns (constraints, provenance) with constraints as QuadFunc, in the order
    a^T x - b <= 0; -a^T x + b <= 0; (a^T x)^2 - b^2 <= 0; -(a^T x)^2 + b^2 <= 0;
    x_i (x_i - 1) <= 0; -x_i (x_i - 1) <= 0.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    m, n = a.shape
    zero = np.zeros((n, n))
    cons, prov = [], []
    for j in range(m):
        cons.append(QuadFunc(zero.copy(), a[j].copy(), -rhs[j]))
        prov.append({"family": "linear_le", "source_index": j})
    for j in range(m):
        cons.append(QuadFunc(zero.copy(), -a[j], rhs[j]))
        prov.append({"family": "linear_ge", "source_index": j})
    for j in range(m):
        cons.append(QuadFunc(np.outer(a[j], a[j]), np.zeros(n), -rhs[j] ** 2))
        prov.append({"family": "square_le", "source_index": j})
    for j in range(m):
        cons.append(QuadFunc(-np.outer(a[j], a[j]), np.zeros(n), rhs[j] ** 2))
        prov.append({"family": "square_ge", "source_index": j})
    for sign, fam in ((1.0, "binary_le"), (-1.0, "binary_ge")):
        for i in range(s):
            E = np.zeros((n, n))
            E[i, i] = sign
            e = np.zeros(n)
            e[i] = -sign
            cons.append(QuadFunc(E, e, 0.0))
            prov.append({"family": fam, "source_index": i})
    return cons, prov


def miqp_to_pd(p: MixedIntegerQP) -> ReformulationMap:
    """Continuous all-quadratic reformulation with 4m + 2s constraints."""
    cons, prov = pd_constraints(p.a, p.rhs, p.s)
    target = QPInstance(p.objective, tuple(cons), name=f"{p.name}:pd" if p.name else "pd")
    vmap = {"x": list(range(p.n))}
    return ReformulationMap("miqp", target, vmap, prov, miqp=p, data={"m": p.m, "s": p.s})


def _binary_patterns(s):
    return itertools.product((0.0, 1.0), repeat=s)


def compute_M(p: RobustMIQP) -> float:
    """Largest scenario cost over the feasible set, clamped below at 0."""
    from .certificates import check_robust_cone

    cert = check_robust_cone(p)
    if cert.verdict != "holds":
        raise PreconditionError("feasible set is not certified compact; M is undefined")
    costs = p.scenario_costs()
    n = p.n
    best = -np.inf
    feasible = False
    for pattern in _binary_patterns(p.s):
        eqs = [(p.a[j], p.rhs[j]) for j in range(p.m)]
        for i, v in enumerate(pattern):
            e = np.zeros(n)
            e[i] = 1.0
            eqs.append((e, v))
        for ck in costs:
            res = lp_solve(ck, eqs, sense="max")
            if res.status == "infeasible":
                break
            feasible = True
            if res.status == "unbounded":
                raise PreconditionError("scenario cost unbounded on the feasible set")
            best = max(best, res.value)
    if not feasible:
        raise InfeasibleError("empty feasible set")
    return float(max(best, 0.0))


def robust_to_ap(p: RobustMIQP, M=None, display_signs=False) -> ReformulationMap:
    """Lift the robust MIQP to z = (x, t1, t2, v) and expand to 4 l(m,q) + 2s constraints.

    ``display_signs=True`` uses right-hand side -M on the last two rows instead of +M
    (the two rows read t1 + v_{q+1} = M and t1 - t2 + v_{q+2} = M in the derivation).
    """
    if M is None:
        M = compute_M(p)
    n, m, q = p.n, p.m, p.q
    N = n + q + 4
    it1, it2, iv = n, n + 1, n + 2
    W = np.zeros((N, N))
    W[:n, :n] = p.A0 + p.rho * np.eye(n)
    w = np.zeros(N)
    w[it1], w[it2] = 1.0, -1.0
    rows, rhs = [], []
    for j in range(m):
        r = np.zeros(N)
        r[:n] = p.a[j]
        rows.append(r)
        rhs.append(p.rhs[j])
    for k, ck in enumerate(p.scenario_costs()[:q]):
        r = np.zeros(N)
        r[:n] = ck
        r[it1], r[it2] = -1.0, 1.0
        r[iv + k] = 1.0
        rows.append(r)
        rhs.append(0.0)
    bM = -M if display_signs else M
    r = np.zeros(N)
    r[it1] = 1.0
    r[iv + q] = 1.0
    rows.append(r)
    rhs.append(bM)
    r = np.zeros(N)
    r[it1], r[it2] = 1.0, -1.0
    r[iv + q + 1] = 1.0
    rows.append(r)
    rhs.append(bM)
    a_bar, b_bar = np.array(rows), np.array(rhs)
    obj = QuadFunc(W, w, 0.0)
    ap = MixedIntegerQP(obj, a_bar, b_bar, p.s, name=f"{p.name}:ap" if p.name else "ap")
    cons, prov = pd_constraints(a_bar, b_bar, p.s)
    target = QPInstance(obj, tuple(cons), name=ap.name + ":pd")
    vmap = {
        "x": list(range(n)),
        "t1": it1,
        "t2": it2,
        "v": list(range(iv, iv + q + 2)),
        "recover_t": "t = z[t1] - z[t2]",
    }
    diags = []
    if display_signs and M > 0:
        diags.append("display-sign rows t1 + v = -M force an empty feasible set for M > 0")
    return ReformulationMap("robust_miqp", target, vmap, prov, miqp=ap,
                            data={"M": M, "l": m + q + 2, "W": W, "w": w, "a_bar": a_bar, "b_bar": b_bar,
                                  "display_signs": display_signs}, diagnostics=diags)


def lift_robust_point(p: RobustMIQP, x, t, M) -> np.ndarray:
    """Map a feasible (x, t) of the epigraph form to z = (x, t1, t2, v)."""
    x = np.asarray(x, dtype=float)
    costs = p.scenario_costs()[: p.q]
    v = np.concatenate([t - costs @ x, [M - max(t, 0.0), M - t]])
    return np.concatenate([x, [max(t, 0.0), -min(t, 0.0)], v])


def hqp_to_qp(h: HQPInstance) -> QPInstance:
    """min x^T A x s.t. x^T B x - 1 <= 0, x >= 0."""
    n = h.n
    return QPInstance(QuadFunc(h.A, np.zeros(n), 0.0), (QuadFunc(h.B, np.zeros(n), -1.0),), name=h.name)


def alpha_star_details(h: HQPInstance):
    """Return (alpha*, d) with alpha* = min over the simplex of d^T A d / d^T B d.

    Exact: a minimizer of the ratio relative to its support is a generalized
    eigenvector of (A_FF, B_FF), so every face is scanned.
    """
    from scipy.linalg import eig

    verdict = check_copositive(h.B)
    if verdict.status != STRICT:
        raise PreconditionError(f"B must be strictly copositive (got {verdict.status})")
    n = h.n
    best, best_d = np.inf, None
    for k in range(1, n + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            AF, BF = h.A[np.ix_(F, F)], h.B[np.ix_(F, F)]
            vals, vecs = eig(AF, BF)
            for lam, y in zip(vals, vecs.T):
                if not np.isfinite(lam) or abs(lam.imag) > 1e-9 * (1 + abs(lam.real)):
                    continue
                y = np.real(y)
                if y.sum() < 0:
                    y = -y
                if y.min() < -1e-9 * np.abs(y).max() or y.sum() <= 0:
                    continue
                d = np.zeros(n)
                d[F] = np.maximum(y, 0.0)
                d /= d.sum()
                ratio = (d @ h.A @ d) / (d @ h.B @ d)
                if ratio < best:
                    best, best_d = ratio, d
    best_d = best_d / np.sqrt(best_d @ h.B @ best_d)
    return float(best), best_d


def standard_form_alpha_star(h: HQPInstance) -> float:
    return alpha_star_details(h)[0]


def alpha_star_sampled(h: HQPInstance, samples=20000, seed=0) -> float:
    """Dense random simplex sampling of the ratio (upper estimate of alpha*)."""
    rng = np.random.default_rng(seed)
    D = rng.dirichlet(np.ones(h.n), size=samples)
    D = np.vstack([D, np.eye(h.n)])
    num = np.einsum("ij,jk,ik->i", D, h.A, D)
    den = np.einsum("ij,jk,ik->i", D, h.B, D)
    return float((num / den).min())


@dataclass
class CopositiveRelaxation:
    H: np.ndarray
    H_list: list
    J0: np.ndarray
    cone: str = "completely_positive"

    @staticmethod
    def embed(x) -> np.ndarray:
        return np.concatenate([[1.0], np.asarray(x, dtype=float)])

    def objective_at(self, x) -> float:
        z = self.embed(x)
        return float(np.trace(self.H @ np.outer(z, z)))

    def to_dict(self) -> dict:
        return {"H": self.H.tolist(), "H_list": [Hi.tolist() for Hi in self.H_list],
                "J0": self.J0.tolist(), "cone": self.cone}


def build_copositive_relaxation(p: QPInstance) -> CopositiveRelaxation:
    n = p.n
    J0 = np.zeros((n + 1, n + 1))
    J0[0, 0] = 1.0
    return CopositiveRelaxation(p.objective.homogenized(), [g.homogenized() for g in p.constraints], J0)
