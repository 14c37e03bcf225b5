"""Built-in regression corpus of small worked examples with expected outcomes."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import WeakDualityError
from .io import ParseError, instance_from_dict
from .oracle import membership
from .pipeline import RunConfig, continuous_form, gap, reformulate, solve_primal

PREFIX = "builtin:"
VALUE_TOL = 1e-4


def _files():
    return resources.files("semilag") / "data"


def builtin_names() -> list:
    return sorted(p.name[:-5] for p in _files().iterdir() if p.name.endswith(".json"))


def builtin_dict(name: str) -> dict:
    if name.startswith(PREFIX):
        name = name[len(PREFIX):]
    path = _files() / f"{name}.json"
    if not path.is_file():
        raise ParseError(f"no built-in instance named {name!r}; known: {', '.join(builtin_names())}")
    return json.loads(path.read_text())


def load_builtin(name: str):
    return instance_from_dict(builtin_dict(name))


def expectations(name: str) -> dict:
    return builtin_dict(name).get("expect", {})


@dataclass
class CheckRow:
    instance: str
    check: str
    expected: object
    got: object
    passed: bool
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"instance": self.instance, "check": self.check, "expected": self.expected,
                "got": self.got, "passed": bool(self.passed), "seconds": round(self.seconds, 3)}


def _value(v):
    if isinstance(v, str):
        return float(v)
    return float(v)


def _close(a, b, tol):
    if np.isinf(a) or np.isinf(b):
        return a == b
    return abs(a - b) <= tol


def check_instance(name: str, cfg: RunConfig | None = None) -> list:
    cfg = cfg or RunConfig()
    inst = load_builtin(name)
    exp = expectations(name)
    rows = []

    def add(check, expected, got, passed, t0):
        rows.append(CheckRow(name, check, expected, got, bool(passed), time.perf_counter() - t0))

    t0 = time.perf_counter()
    want_primal = _value(exp["primal"]) if "primal" in exp else None
    if want_primal is not None and np.isinf(want_primal) and want_primal > 0:
        pr = solve_primal(inst, cfg)
        add("primal", "inf", pr.to_dict()["value"], not pr.feasible, t0)
        return rows
    try:
        pr, dr, rep = gap(inst, cfg)
    except WeakDualityError as exc:
        add("weak_duality", "dual <= primal", str(exc), False, t0)
        return rows
    if want_primal is not None:
        tol = max(VALUE_TOL, pr.error_bar)
        add("primal", want_primal, pr.value, _close(pr.value, want_primal, tol), t0)
    add("weak_duality", "dual <= primal + 1e-6", [rep.dual_value, rep.primal_value],
        not rep.dual_value > rep.primal_value + 1e-6, t0)
    if "dual" in exp:
        want = _value(exp["dual"])
        add("dual", exp["dual"], dr.to_dict()["best_value"], _close(dr.best_value, want, VALUE_TOL), t0)
    if "classification" in exp:
        add("classification", exp["classification"], rep.classification,
            rep.classification == exp["classification"], t0)
    if "certificate" in exp:
        t0 = time.perf_counter()
        verdicts = [c.verdict for c in rep.certificates]
        add("certificate", exp["certificate"], verdicts, all(v == exp["certificate"] for v in verdicts), t0)
    if "alpha_star" in exp:
        from .reformulate import standard_form_alpha_star

        t0 = time.perf_counter()
        a = standard_form_alpha_star(inst)
        add("alpha_star", exp["alpha_star"], a, _close(a, exp["alpha_star"], 1e-8), t0)
    for key, target in (("pd_constraints", "pd"), ("ap_constraints", "ap")):
        if key in exp:
            t0 = time.perf_counter()
            qp, _ = reformulate(inst, target)
            add(key, exp[key], qp.m, qp.m == exp[key], t0)
    for tgt, verdict in exp.get("membership", []):
        t0 = time.perf_counter()
        q = membership(continuous_form(inst), tgt, seed=cfg.seed)
        add(f"membership{tuple(tgt)}", verdict, q.verdict, q.verdict == verdict, t0)
    return rows


def run_corpus(cfg: RunConfig | None = None, names=None) -> list:
    rows = []
    for name in names or builtin_names():
        rows.extend(check_instance(name, cfg))
    return rows
