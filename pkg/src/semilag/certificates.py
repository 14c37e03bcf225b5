"""Checkable sufficient conditions for zero duality gaps.

Each check returns a :class:`Certificate` whose evidence can be re-verified
independently (eigen-residuals, LP optima, copositivity verdicts).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copositivity import NOT_COPOSITIVE, STRICT, UNDECIDED, check_copositive, check_copositive_on_cone
from .numkernel import lp_solve, sym_eig

HOLDS = "holds"
FAILS = "fails"
UNDECIDED_CERT = "undecided"

EIG_NONZERO = 1e-8
EIG_GROUP = 1e-8
ORTHO_TOL = 1e-8
NONNEG_TOL = 1e-9
PSD_TOL = 1e-9
RA_TOL = 1e-9


@dataclass
class Certificate:
    kind: str
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self) -> dict:
        return {"kind": self.kind, "verdict": self.verdict, "evidence": _jsonable(self.evidence)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isfinite(v):
            return v
        return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def _verdict_from_cop(status):
    if status == STRICT:
        return HOLDS
    if status == UNDECIDED:
        return UNDECIDED_CERT
    return FAILS


def check_hqp(h, eps_cop=1e-9) -> Certificate:
    """Strong convexifiability of min x^T A x s.t. x^T B x <= 1: B strictly copositive."""
    v = check_copositive(h.B, eps=eps_cop)
    return Certificate("hqp_strong_convexifiable", _verdict_from_cop(v.status), {"B_copositivity": v.to_dict()})


def normalize_sign(d):
    """Flip an eigenvector so its largest-magnitude entry is positive."""
    d = np.asarray(d, dtype=float)
    k = int(np.argmax(np.abs(d)))
    return d if d[k] >= 0 else -d


def _eigen_groups(A):
    eig = sym_eig(A)
    w, V = eig.eigenvalues, eig.eigenvectors
    scale = 1.0 + np.abs(w).max(initial=0.0)
    groups, start = [], 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > EIG_GROUP * scale:
            groups.append((float(w[start:k].mean()), V[:, start:k]))
            start = k
    return groups, w, V


def _nonneg_in_span(V, R):
    """Find y = V c >= 0, sum y = 1, R y = 0 by LP; returns y or None.

    The search covers the whole span of ``V``, so a nonnegative eigenvector
    inside a repeated eigenspace is found even when no basis vector is one.
    """
    n, k = V.shape
    # variables: c+ (k), c- (k), y (n), all >= 0; y = V (c+ - c-)
    N = 2 * k + n
    eqs = []
    for i in range(n):
        row = np.zeros(N)
        row[:k] = V[i]
        row[k:2 * k] = -V[i]
        row[2 * k + i] = -1.0
        eqs.append((row, 0.0))
    for r in np.atleast_2d(R):
        if r.size == 0:
            continue
        row = np.zeros(N)
        row[2 * k:] = r
        eqs.append((row, 0.0))
    row = np.zeros(N)
    row[2 * k:] = 1.0
    eqs.append((row, 1.0))
    res = lp_solve(np.zeros(N), eqs)
    if res.status != "optimal":
        return None
    y = res.x[2 * k:]
    return y


def _eigvec_search(A, R, sign):
    """Nonnegative eigenvectors (orthogonal to the rows of R) for eigenvalues of the given sign."""
    groups, _, _ = _eigen_groups(A)
    found = []
    for lam, V in groups:
        if abs(lam) <= EIG_NONZERO or np.sign(lam) != sign:
            continue
        # individual basis vectors first (cheap and matches the textbook check)
        hit = None
        for j in range(V.shape[1]):
            d = normalize_sign(V[:, j])
            if d.min() >= -NONNEG_TOL and (R.size == 0 or np.abs(R @ d).max() <= ORTHO_TOL):
                hit = d
                break
        if hit is None and V.shape[1] > 1:
            y = _nonneg_in_span(V, R)
            if y is not None:
                hit = y / np.linalg.norm(y)
        if hit is not None:
            resid = float(np.linalg.norm(A @ hit - lam * hit))
            ortho = float(np.abs(R @ hit).max(initial=0.0)) if R.size else 0.0
            found.append({"eigenvalue": lam, "d": hit, "eigen_residual": resid, "orthogonality": ortho,
                          "eigenspace_dim": V.shape[1]})
    return found


def check_uniform(p, eps_cop=1e-9) -> Certificate:
    """Strong convexifiability of a uniform QP (all constraint Hessians are multiples of A)."""
    A = p.A
    alphas = np.asarray(p.alphas, dtype=float)
    R = p.bs - alphas[:, None] * p.b[None, :] if len(alphas) else np.zeros((0, p.n))
    ev: dict = {}
    pos = check_copositive(A, eps=eps_cop)
    ev["A_copositivity"] = pos.to_dict()
    premise_status = FAILS
    if pos.status == STRICT:
        premise_status = HOLDS
        ev["premise_scalar_sign"] = 1
    elif np.any(alphas < 0):
        neg = check_copositive(-A, eps=eps_cop)
        ev["minus_A_copositivity"] = neg.to_dict()
        if neg.status == STRICT:
            premise_status = HOLDS
            ev["premise_scalar_sign"] = -1
        elif UNDECIDED in (neg.status, pos.status):
            premise_status = UNDECIDED_CERT
    elif pos.status == UNDECIDED:
        premise_status = UNDECIDED_CERT
    ev["premise"] = premise_status

    w = sym_eig(A).eigenvalues
    lam_min, lam_max = float(w[0]), float(w[-1])
    ev["eigenvalue_range"] = [lam_min, lam_max]
    pos_vecs = _eigvec_search(A, R, +1)
    neg_vecs = _eigvec_search(A, R, -1)
    cond_i = lam_min >= -PSD_TOL and bool(pos_vecs)
    cond_ii = lam_max <= PSD_TOL and bool(neg_vecs)
    cond_iii = bool(pos_vecs) and bool(neg_vecs)
    ev["condition_i"] = cond_i
    ev["condition_ii"] = cond_ii
    ev["condition_iii"] = cond_iii
    if cond_i:
        ev["d"] = pos_vecs[0]
    if cond_ii:
        ev["d"] = neg_vecs[0]
    if cond_iii:
        ev["d_positive"] = pos_vecs[0]
        # the negative-eigenvalue vector lies in -R^n_+
        ev["d_hat"] = {**neg_vecs[0], "d": -neg_vecs[0]["d"]}
    any_cond = cond_i or cond_ii or cond_iii
    if premise_status == HOLDS and any_cond:
        verdict = HOLDS
    elif premise_status == UNDECIDED_CERT and any_cond:
        verdict = UNDECIDED_CERT
    else:
        verdict = FAILS
    return Certificate("uniform_strong_convexifiable", verdict, ev)


def check_RA(p) -> Certificate:
    """Every nonnegative solution of the equality system has binary coordinates in [0, 1]."""
    eqs = [(p.a[j], float(p.rhs[j])) for j in range(p.m)]
    maxima = {}
    verdict = HOLDS
    for i in range(p.s):
        c = np.zeros(p.n)
        c[i] = 1.0
        res = lp_solve(c, eqs, sense="max")
        if res.status == "infeasible":
            maxima[i] = "infeasible"
            break
        if res.status == "unbounded":
            maxima[i] = "unbounded"
            verdict = FAILS
            continue
        maxima[i] = res.value
        if res.value > 1 + RA_TOL:
            verdict = FAILS
    if "infeasible" in maxima.values():
        return Certificate("RA", HOLDS, {"system": "infeasible (vacuous)"})
    return Certificate("RA", verdict, {"max_binary_coordinate": maxima})


def check_miqp_cone(p, eps_cop=1e-9) -> Certificate:
    """Objective strictly copositive on {d >= 0 : a_j^T d = 0, d_i = 0 (i < s)}."""
    v = check_copositive_on_cone(p.objective.A, p.a if p.m else None, zero_idx=range(p.s), eps=eps_cop)
    return Certificate("miqp_cone", _verdict_from_cop(v.status), {"cone_copositivity": v.to_dict()})


def check_robust_cone(p) -> Certificate:
    """Recession cone {d >= 0 : a_j^T d = 0, d_i = 0 (i < s)} is trivial (feasible set compact)."""
    n = p.n
    eqs = [(p.a[j], 0.0) for j in range(p.m)]
    for i in range(p.s):
        e = np.zeros(n)
        e[i] = 1.0
        eqs.append((e, 0.0))
    res = lp_solve(np.ones(n), eqs, inequalities=[(np.ones(n), 1.0)], sense="max")
    val = res.value if res.status == "optimal" else np.inf
    verdict = HOLDS if val <= RA_TOL else FAILS
    ev = {"max_sum_on_cone_slice": val}
    if verdict == FAILS and res.x is not None:
        ev["direction"] = res.x
    return Certificate("robust_cone", verdict, ev)


check_compactness_condition = check_robust_cone


def applicable_certificates(instance) -> list:
    """All certificates whose hypotheses are phrased for this instance kind."""
    kind = getattr(instance, "kind", "")
    if kind == "hqp":
        return [check_hqp(instance)]
    if kind == "uniform":
        return [check_uniform(instance)]
    if kind == "miqp":
        return [check_RA(instance), check_miqp_cone(instance)]
    if kind == "robust_miqp":
        return [check_RA(instance), check_robust_cone(instance)]
    return [Certificate("none_applicable", UNDECIDED_CERT, {"kind": kind})]


def sample_convexifiability(p, budget=4000, R=10.0, seed=0, slab=1e-3) -> dict:
    """Falsification probe for convexifiability (at most two constraints).

    Samples the image of ``x -> (g(x), f(x))`` over ``[0, R]^n``, computes the
    lowest point of the sampled convex hull (plus the nonnegative orthant)
    on the slab ``|g_i| <= slab`` and asks the membership oracle whether
    that point belongs to the image set itself.
    """
    from scipy.optimize import linprog

    from .oracle import NON_MEMBER, MEMBER, membership

    if p.m + 1 > 3 or p.m < 1:
        raise ValueError("sample_convexifiability needs one or two constraints")
    rng = np.random.default_rng(seed)
    n = p.n
    k = max(2, int(round(budget ** (1.0 / n))))
    axes = [np.linspace(0.0, R, k)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    X = np.vstack([grid, rng.uniform(0, R, size=(budget, n))])
    G = np.column_stack([g.values(X) for g in p.constraints])
    F = p.objective.values(X)
    # min sum lam F  s.t.  sum lam G_i <= slab, sum lam = 1, lam >= 0
    res = linprog(F, A_ub=G.T, b_ub=np.full(p.m, slab), A_eq=np.ones((1, len(F))), b_eq=[1.0],
                  bounds=(0, None), method="highs")
    feas = np.all(G <= slab, axis=1)
    image_min = float(F[feas].min()) if feas.any() else np.inf
    out = {"samples": len(F), "R": R, "image_slice_min": image_min}
    if res.status != 0:
        out["result"] = "inconclusive at budget"
        return out
    hull_min = float(res.fun)
    out["hull_slice_min"] = hull_min
    if hull_min >= image_min - 1e-6 * (1 + abs(image_min)):
        out["result"] = "consistent with convexifiable"
        return out
    # probe a point strictly between the hull floor and the attainable floor
    probe_r = hull_min + 0.5 * (min(image_min, hull_min + 1.0) - hull_min)
    q = membership(p, np.concatenate([np.zeros(p.m), [probe_r]]))
    out["probe"] = [0.0] * p.m + [probe_r]
    out["probe_membership"] = q.verdict
    if q.verdict == NON_MEMBER:
        out["result"] = "counterexample point found"
        out["point"] = out["probe"]
    elif q.verdict == MEMBER:
        out["result"] = "consistent with convexifiable"
    else:
        out["result"] = "inconclusive at budget"
    return out
