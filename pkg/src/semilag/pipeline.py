"""Kind dispatch shared by the CLI and the built-in corpus runner."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificates import applicable_certificates
from .copositivity import EPS_COP
from .dual import TOL_DUAL, TOL_GAP, U_CAP, gap_report, maximize_dual
from .exceptions import KindMismatchError, TooLargeError
from .oracle import PrimalResult, solve_miqp_bruteforce, solve_qp_bruteforce, solve_robust_bruteforce
from .reformulate import (alpha_star_details, build_copositive_relaxation, hqp_to_qp, miqp_to_pd,
                          robust_to_ap)


@dataclass
class RunConfig:
    tol_gap: float = TOL_GAP
    eps_cop: float = EPS_COP
    tol_dual: float = TOL_DUAL
    u_cap: float = U_CAP
    n_max: int = 14
    grid: int = 200_000
    max_iter: int = 500
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tol_gap", "eps_cop", "tol_dual", "u_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("n_max", "grid", "max_iter"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be a positive integer")

    def to_dict(self) -> dict:
        return {"tol_gap": self.tol_gap, "eps_cop": self.eps_cop, "tol_dual": self.tol_dual,
                "u_cap": self.u_cap, "n_max": self.n_max, "grid": self.grid,
                "max_iter": self.max_iter, "seed": self.seed}


def continuous_form(instance):
    """The nonnegative QP whose semi-Lagrangian dual is studied for this instance."""
    kind = instance.kind
    if kind == "qp":
        return instance
    if kind == "uniform":
        return instance.to_qp()
    if kind == "hqp":
        return hqp_to_qp(instance)
    if kind == "miqp":
        return miqp_to_pd(instance).target
    if kind == "robust_miqp":
        return robust_to_ap(instance).target
    raise KindMismatchError(f"unsupported kind {kind!r}")


def solve_primal(instance, cfg: RunConfig | None = None) -> PrimalResult:
    cfg = cfg or RunConfig()
    kind = instance.kind
    if kind == "miqp":
        return solve_miqp_bruteforce(instance)
    if kind == "robust_miqp":
        return solve_robust_bruteforce(instance)
    if kind == "hqp":
        if instance.n <= 4:
            return solve_qp_bruteforce(hqp_to_qp(instance), grid_points=cfg.grid)
        alpha, x = alpha_star_details(instance)[:2]
        if alpha >= 0:
            return PrimalResult(0.0, np.zeros(instance.n), "alpha_star")
        return PrimalResult(alpha, x, "alpha_star")
    qp = continuous_form(instance)
    if qp.n > 4:
        raise TooLargeError("the grid oracle supports n <= 4 for continuous instances")
    return solve_qp_bruteforce(qp, grid_points=cfg.grid)


def solve_dual(instance, cfg: RunConfig | None = None):
    cfg = cfg or RunConfig()
    return maximize_dual(continuous_form(instance), tol_dual=cfg.tol_dual, u_cap=cfg.u_cap,
                         max_iter=cfg.max_iter, eps_cop=cfg.eps_cop, n_max=cfg.n_max)


def certify(instance, cfg: RunConfig | None = None) -> list:
    return applicable_certificates(instance)


def gap(instance, cfg: RunConfig | None = None):
    """Primal oracle, dual maximization and certificates combined in one report."""
    cfg = cfg or RunConfig()
    primal = solve_primal(instance, cfg)
    dual = solve_dual(instance, cfg)
    report = gap_report(instance, primal, dual, certify(instance, cfg), cfg.tol_gap)
    return primal, dual, report


def reformulate(instance, target: str):
    """Return (instance, extra metadata) for target in {pd, ap, cp}."""
    kind = instance.kind
    if target == "pd":
        if kind != "miqp":
            raise KindMismatchError(f"target pd needs a miqp instance, got {kind}")
        rm = miqp_to_pd(instance)
        return rm.target, rm.to_dict()
    if target == "ap":
        if kind != "robust_miqp":
            raise KindMismatchError(f"target ap needs a robust_miqp instance, got {kind}")
        rm = robust_to_ap(instance)
        return rm.target, rm.to_dict()
    if target == "cp":
        if kind not in ("qp", "uniform", "hqp"):
            raise KindMismatchError(f"target cp needs a continuous instance, got {kind}")
        rel = build_copositive_relaxation(continuous_form(instance))
        return None, rel.to_dict()
    raise ValueError(f"unknown target {target!r}")
