"""JSON (de)serialization of problem instances."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import SemilagError
from .model import HQPInstance, MixedIntegerQP, QPInstance, RobustMIQP, UniformQPInstance

KINDS = ("qp", "miqp", "hqp", "uniform", "robust_miqp")


class ParseError(SemilagError, ValueError):
    """Instance file missing, malformed, or inconsistent with the schema."""


def _mat(obj, key, n=None, default_zero=False):
    if key not in obj:
        if default_zero and n is not None:
            return np.zeros((n, n))
        raise ParseError(f"missing key {key!r}")
    M = np.array(obj[key], dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParseError(f"{key!r} must be a square matrix, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise ParseError(f"{key!r} has dimension {M.shape[0]}, expected {n}")
    return M


def _vec(obj, key, n, default_zero=True):
    if key not in obj:
        if default_zero:
            return np.zeros(n)
        raise ParseError(f"missing key {key!r}")
    v = np.array(obj[key], dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ParseError(f"{key!r} has length {v.size}, expected {n}")
    return v


def _check_indices(items, start, label):
    for pos, item in enumerate(items):
        if "index" in item and int(item["index"]) != pos + start:
            raise ParseError(f"{label} at position {pos} carries index {item['index']}, expected {pos + start}")


def _objective(obj, n=None):
    if "objective" not in obj:
        raise ParseError("missing key 'objective'")
    o = obj["objective"]
    A = _mat(o, "A", n)
    n = A.shape[0]
    return A, _vec(o, "b", n), float(o.get("c", 0.0))


def _equalities(obj, n):
    eqs = obj.get("equalities", [])
    _check_indices(eqs, 1, "equality")
    return [(_vec(e, "a", n, default_zero=False), float(e["b"])) for e in eqs]


def instance_from_dict(obj):
    if not isinstance(obj, dict):
        raise ParseError("instance must be a JSON object")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {KINDS}")
    name = str(obj.get("name", ""))
    try:
        if kind == "qp":
            A, b, c = _objective(obj)
            n = A.shape[0]
            cons = obj.get("constraints", [])
            _check_indices(cons, 0, "constraint")
            triples = [(_mat(g, "A", n, default_zero=True), _vec(g, "b", n), float(g.get("c", 0.0))) for g in cons]
            return QPInstance.build(A, b, c, triples, name=name)
        if kind == "miqp":
            A, b, c = _objective(obj)
            n = A.shape[0]
            return MixedIntegerQP.build(A, b, c, _equalities(obj, n), int(obj.get("s", 0)), name=name)
        if kind == "hqp":
            return HQPInstance.build(_mat(obj, "A"), _mat(obj, "B"), name=name)
        if kind == "uniform":
            A, b, c = _objective(obj)
            n = A.shape[0]
            cons = obj.get("constraints", [])
            _check_indices(cons, 0, "constraint")
            triples = [(float(g["alpha"]), _vec(g, "b", n), float(g.get("c", 0.0))) for g in cons]
            return UniformQPInstance.build(A, b, c, triples, name=name)
        A0 = _mat(obj, "A0")
        n = A0.shape[0]
        gens = np.array(obj.get("generators", []), dtype=float).reshape(-1, n)
        L = gens.shape[0]
        raw = obj.get("scenarios", [])
        if L == 0:
            scen = np.zeros((max(len(raw), 1), 0))
        else:
            scen = np.array(raw, dtype=float).reshape(-1, L)
            if scen.shape[0] == 0:
                raise ParseError("robust instance needs at least one scenario")
        return RobustMIQP.build(A0, float(obj.get("rho", 0.0)), _vec(obj, "c0", n), gens, scen,
                                _equalities(obj, n), int(obj.get("s", 0)), name=name)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed {kind} instance: {exc}") from exc


def _objective_dict(f):
    return {"A": f.A.tolist(), "b": f.b.tolist(), "c": float(f.c)}


def instance_to_dict(inst) -> dict:
    kind = inst.kind
    out = {"kind": kind}
    if getattr(inst, "name", ""):
        out["name"] = inst.name
    if kind == "qp":
        out["n"] = inst.n
        out["objective"] = _objective_dict(inst.objective)
        out["constraints"] = [{"index": i, **_objective_dict(g)} for i, g in enumerate(inst.constraints)]
    elif kind == "miqp":
        out["n"] = inst.n
        out["objective"] = _objective_dict(inst.objective)
        out["equalities"] = [{"index": j + 1, "a": inst.a[j].tolist(), "b": float(inst.rhs[j])}
                             for j in range(inst.m)]
        out["s"] = inst.s
    elif kind == "hqp":
        out["A"] = inst.A.tolist()
        out["B"] = inst.B.tolist()
    elif kind == "uniform":
        out["objective"] = {"A": inst.A.tolist(), "b": inst.b.tolist(), "c": float(inst.c)}
        out["constraints"] = [{"index": i, "alpha": float(al), "b": bi.tolist(), "c": float(ci)}
                              for i, (al, bi, ci) in enumerate(zip(inst.alphas, inst.bs, inst.cs))]
    elif kind == "robust_miqp":
        out.update({"A0": inst.A0.tolist(), "rho": inst.rho, "c0": inst.c0.tolist(),
                    "generators": inst.generators.tolist(), "scenarios": inst.scenarios.tolist(),
                    "equalities": [{"index": j + 1, "a": inst.a[j].tolist(), "b": float(inst.rhs[j])}
                                   for j in range(inst.m)],
                    "s": inst.s})
    return out


def loads(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return instance_from_dict(obj)


def load(path):
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"no such file: {path}")
    return loads(p.read_text())


def dumps(inst, **kw) -> str:
    return json.dumps(instance_to_dict(inst), **kw)


def dump(inst, path):
    Path(path).write_text(dumps(inst, indent=2) + "\n")
