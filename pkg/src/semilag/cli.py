"""Command-line interface: ``semilag <command> INSTANCE [options]``.

Exit codes: 0 ok, 1 other error, 2 infeasible, 3 parse error, 4 kind mismatch,
5 weak-duality breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import PREFIX, builtin_dict, builtin_names, load_builtin, run_corpus
from .exceptions import (InfeasibleError, InvalidInstanceError, KindMismatchError, SemilagError,
                         WeakDualityError)
from .io import ParseError, instance_to_dict, load
from .model import validate
from .oracle import membership
from .pipeline import RunConfig, certify, continuous_form, gap, reformulate, solve_dual, solve_primal

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_KIND = 4
EXIT_WEAK_DUALITY = 5


def read_instance(path: str):
    """Load an instance file, or a shipped example given as ``builtin:NAME``."""
    inst = load_builtin(path) if path.startswith(PREFIX) else load(path)
    report = validate(inst)
    if not report.ok:
        raise InvalidInstanceError(report.errors)
    return inst


def _provenance(args, cfg):
    return {"tool": "semilag", "version": __version__, "command": args.command,
            "input": getattr(args, "instance", None), "config": cfg.to_dict()}


def _flatten(obj, prefix=""):
    """Yield (dotted key, scalar) pairs for the delimited text format."""
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _text_value(v):
    if isinstance(v, list):
        return ",".join(_text_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def emit(payload: dict, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        json.dump(payload, out, indent=2, default=_json_default)
        out.write("\n")
        return
    for key, value in _flatten(payload):
        out.write(f"{key}\t{_text_value(value)}\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _figure_dir(args):
    if not getattr(args, "figures", None):
        return None
    d = Path(args.figures)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _stem(args):
    src = getattr(args, "instance", "") or "corpus"
    return Path(src.replace(PREFIX, "")).stem


def cmd_solve(args, cfg):
    inst = read_instance(args.instance)
    res = solve_primal(inst, cfg)
    payload = {"provenance": _provenance(args, cfg), "kind": inst.kind, "result": res.to_dict()}
    return payload, (EXIT_OK if res.feasible else EXIT_INFEASIBLE)


def cmd_dual(args, cfg):
    inst = read_instance(args.instance)
    res = solve_dual(inst, cfg)
    payload = {"provenance": _provenance(args, cfg), "kind": inst.kind, "result": res.to_dict()}
    figs = _figure_dir(args)
    if figs is not None:
        from .plotting import plot_dual_history

        payload["figures"] = [plot_dual_history(res, figs / f"{_stem(args)}_dual.png")]
    return payload, EXIT_OK


def cmd_gap(args, cfg):
    inst = read_instance(args.instance)
    primal, dual, rep = gap(inst, cfg)
    payload = {"provenance": _provenance(args, cfg), "kind": inst.kind, "result": rep.to_dict(),
               "primal": primal.to_dict(), "dual": dual.to_dict()}
    figs = _figure_dir(args)
    if figs is not None:
        from .plotting import plot_dual_history

        payload["figures"] = [plot_dual_history(dual, figs / f"{_stem(args)}_gap.png", primal.value)]
    if rep.dual_value > rep.primal_value + 1e-6:
        return payload, EXIT_WEAK_DUALITY
    return payload, (EXIT_OK if primal.feasible else EXIT_INFEASIBLE)


def cmd_certify(args, cfg):
    inst = read_instance(args.instance)
    certs = certify(inst, cfg)
    return {"provenance": _provenance(args, cfg), "kind": inst.kind,
            "result": [c.to_dict() for c in certs]}, EXIT_OK


def cmd_reformulate(args, cfg):
    inst = read_instance(args.instance)
    target, meta = reformulate(inst, args.target)
    prov = {**_provenance(args, cfg), "target": args.target, "map": meta}
    if target is None:
        return {"provenance": prov, "relaxation": meta}, EXIT_OK
    return {**instance_to_dict(target), "provenance": prov}, EXIT_OK


def _parse_point(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad point {text!r}: {exc}") from exc


def cmd_membership(args, cfg):
    inst = read_instance(args.instance)
    qp = continuous_form(inst)
    results = [membership(qp, _parse_point(t), seed=cfg.seed) for t in args.point]
    payload = {"provenance": _provenance(args, cfg), "kind": inst.kind,
               "result": [q.to_dict() for q in results]}
    figs = _figure_dir(args)
    if figs is not None and qp.m == 1:
        from .plotting import plot_image_set

        pts = [(q.target, q.verdict) for q in results]
        payload["figures"] = [plot_image_set(qp, figs / f"{_stem(args)}_image.png", pts, seed=cfg.seed)]
    return payload, EXIT_OK


def cmd_corpus(args, cfg):
    if args.export:
        d = Path(args.export)
        d.mkdir(parents=True, exist_ok=True)
        for name in builtin_names():
            (d / f"{name}.json").write_text(json.dumps(builtin_dict(name), indent=2) + "\n")
    rows = run_corpus(cfg, args.only or None)
    payload = {"provenance": _provenance(args, cfg), "passed": all(r.passed for r in rows),
               "rows": [r.to_dict() for r in rows]}
    figs = _figure_dir(args)
    if figs is not None:
        from .plotting import plot_corpus

        payload["figures"] = [plot_corpus(rows, figs / "corpus.png")]
    if any(r.check == "weak_duality" and not r.passed for r in rows):
        code = EXIT_WEAK_DUALITY
    else:
        code = EXIT_OK if payload["passed"] else EXIT_ERROR
    if args.format == "text":
        # a single tab-separated table reads better than flattened keys here
        out = ["instance\tcheck\texpected\tgot\tstatus\tseconds"]
        for r in rows:
            out.append("\t".join([r.instance, r.check, _text_value(r.expected), _text_value(r.got),
                                  "PASS" if r.passed else "FAIL", f"{r.seconds:.3f}"]))
        for f in payload.get("figures", []):
            out.append(f"figure\t{f}")
        sys.stdout.write("\n".join(out) + "\n")
        return None, code
    return payload, code


COMMANDS = {
    "solve": cmd_solve,
    "dual": cmd_dual,
    "gap": cmd_gap,
    "certify": cmd_certify,
    "reformulate": cmd_reformulate,
    "membership": cmd_membership,
    "corpus": cmd_corpus,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-gap", type=float, default=1e-4)
    common.add_argument("--eps-cop", type=float, default=1e-9)
    common.add_argument("--tol-dual", type=float, default=1e-6)
    common.add_argument("--u-cap", type=float, default=1e4)
    common.add_argument("--n-max", type=int, default=14)
    common.add_argument("--grid", type=int, default=200_000, help="grid points for the continuous oracle")
    common.add_argument("--max-iter", type=int, default=500)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--figures", metavar="DIR", help="write report figures (PNG) into DIR")

    ap = argparse.ArgumentParser(prog="semilag", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"semilag {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "dual", "gap", "certify"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("instance", help="instance JSON file or builtin:NAME")
    p = sub.add_parser("reformulate", parents=[common])
    p.add_argument("instance")
    p.add_argument("--target", choices=("pd", "ap", "cp"), required=True)
    p = sub.add_parser("membership", parents=[common])
    p.add_argument("instance")
    p.add_argument("--point", action="append", required=True,
                   help="comma-separated (u_0,...,u_m-1,r); repeatable")
    p = sub.add_parser("corpus", parents=[common])
    p.add_argument("--only", action="append", help="restrict to these built-in names")
    p.add_argument("--export", metavar="DIR", help="also write the built-in instances as JSON files")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(tol_gap=args.tol_gap, eps_cop=args.eps_cop, tol_dual=args.tol_dual,
                        u_cap=args.u_cap, n_max=args.n_max, grid=args.grid,
                        max_iter=args.max_iter, seed=args.seed)
    except ValueError as exc:
        print(f"semilag: {exc}", file=sys.stderr)
        return EXIT_ERROR
    np.random.seed(args.seed)
    try:
        payload, code = COMMANDS[args.command](args, cfg)
    except (ParseError, InvalidInstanceError) as exc:
        print(f"semilag: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except KindMismatchError as exc:
        print(f"semilag: kind mismatch: {exc}", file=sys.stderr)
        return EXIT_KIND
    except InfeasibleError as exc:
        print(f"semilag: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except WeakDualityError as exc:
        print(f"semilag: weak duality breached: {exc}", file=sys.stderr)
        return EXIT_WEAK_DUALITY
    except SemilagError as exc:
        print(f"semilag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if payload is not None:
        emit(payload, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
