"""Command-line entry point.

Every subcommand prints one JSON report on stdout. Exit codes:
0 when all requested checks pass, 1 when a check fails, 2 on input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import formats, search, spaces
from .embedding import embed
from .errors import PtolemaicError
from .metric import ALL_CONDITIONS, TOL_CLASS, Condition, scan
from .strip import strip_battery

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _digest_file(path) -> str:
    try:
        return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _digest_flags(args, keys) -> str:
    text = json.dumps({k: getattr(args, k) for k in keys}, sort_keys=True)
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def _read_metric(path):
    _digest_file(path)
    return formats.read_metric(path)


def _conditions(text):
    if not text:
        return list(ALL_CONDITIONS)
    try:
        return [Condition.parse(c) for c in text.split(",") if c.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _condition_checks(space, conditions, threads):
    checks = []
    for rep in scan(space, conditions, workers=threads):
        d = rep.to_dict()
        d["name"] = rep.condition.value.lower()
        d["pass"] = rep.worst_margin >= -TOL_CLASS
        checks.append(d)
    return checks


def cmd_validate(args):
    space = _read_metric(args.file)
    if args.out:
        formats.write_metric(space, args.out)
    return {"inputs": {"file": args.file, "digest": _digest_file(args.file)},
            "checks": [{"name": "metric", "pass": True, "n": space.n}], "labels": list(space.labels)}


def cmd_check(args):
    space = _read_metric(args.file)
    checks = _condition_checks(space, _conditions(args.conditions), args.threads)
    membership = {c["name"]: c["pass"] for c in checks}
    return {"inputs": {"file": args.file, "digest": _digest_file(args.file)},
            "checks": checks, "membership": membership}


def cmd_scan(args):
    return cmd_check(args)


def cmd_embed(args):
    space = _read_metric(args.file)
    res = embed(space, basepoint=args.basepoint)
    d = res.to_dict()
    return {"inputs": {"file": args.file, "digest": _digest_file(args.file)},
            "checks": [{"name": "embeddable", "pass": res.embeddable}], "embedding": d}


def _spec_from(args):
    family = spaces.Family.parse(args.family)
    return spaces.StripSpec(args.a, args.T, args.nt, args.ns, family)


def cmd_gen(args):
    if args.generator:
        space = spaces.random_metric(args.n, args.seed, args.generator)
        keys = ["generator", "n", "seed"]
        meta = {"generator": args.generator, "n": args.n, "seed": args.seed}
    else:
        spec = _spec_from(args)
        space = spaces.strip_sample(spec).space
        keys = ["family", "a", "T", "nt", "ns"]
        meta = {"spec": spec.to_dict()}
    formats.write_metric(space, args.out)
    return {"inputs": {"digest": _digest_flags(args, keys), **meta},
            "checks": [{"name": "generated", "pass": True, "n": space.n, "out": args.out}]}


def cmd_strip_verify(args):
    spec = _spec_from(args)
    checks = [c.to_dict() for c in strip_battery(spec, workers=args.threads)]
    return {"inputs": {"digest": _digest_flags(args, ["family", "a", "T", "nt", "ns"]), "spec": spec.to_dict()},
            "checks": checks}


def cmd_search(args):
    try:
        target = search.parse_signature(args.signature)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    found = search.hunt(args.budget, args.seed, target, workers=args.threads, max_witnesses=args.max_witnesses)
    store = found
    if args.merge:
        store = search.merge(search.load(args.merge), found)
    if args.out:
        search.persist(store, args.out)
    forbidden = sum(1 for w in store if w.signature[2] and not w.signature[1])
    return {
        "inputs": {"digest": _digest_flags(args, ["budget", "seed", "signature", "max_witnesses"]),
                   "budget": args.budget, "seed": args.seed, "signature": args.signature},
        "checks": [{"name": "cosq_subset_qi", "pass": forbidden == 0, "violations": forbidden}],
        "found": len(found),
        "stored": len(store),
        "witnesses": [{"canonical": list(w.canonical), "signature": list(w.signature),
                       "margins": list(w.margins), "provenance": w.provenance} for w in found[: args.show]],
    }


def cmd_catalog(args):
    out = Path(args.emit)
    out.mkdir(parents=True, exist_ok=True)
    cat = spaces.catalog(args.e2_a)
    names = {"E1": "e1", "square": "square", "tetrahedron": "tetrahedron"}
    files = []
    for name, space in cat.items():
        stem = names.get(name, "e2")
        path = formats.write_metric(space, out / f"{stem}.{args.format}")
        reps = {r.condition.value.lower(): r.worst_margin for r in scan(space, workers=1)}
        files.append({"name": name, "file": str(path), "margins": reps,
                      "membership": {k: v >= -TOL_CLASS for k, v in reps.items()}})
    return {"inputs": {"digest": _digest_flags(args, ["e2_a", "format"]), "e2_a": args.e2_a},
            "checks": [{"name": "emitted", "pass": True, "count": len(files)}], "files": files}


def _add_spec_flags(p):
    p.add_argument("--family", default="euclidean", help="euclidean | lp:P | snowflake:EPS | conformal[:H[:R[:K]]]")
    p.add_argument("--a", type=float, default=1.0, help="strip width")
    p.add_argument("--T", type=float, default=5.0, help="strip half-length")
    p.add_argument("--nt", type=int, default=21)
    p.add_argument("--ns", type=int, default=5)


def build_parser():
    parser = argparse.ArgumentParser(prog="ptolemaic", description="Four-point curvature checks and strip rigidity harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        p.add_argument("--timing", action="store_true", help="add wall time to the report")
        return p

    p = add("validate", cmd_validate, "validate a metric file")
    p.add_argument("file")
    p.add_argument("--out", help="re-emit the validated space to this path")

    for name, func in (("check", cmd_check), ("scan", cmd_scan)):
        p = add(name, func, "scan every quadruple of a metric file")
        p.add_argument("file")
        p.add_argument("--conditions", default="pt,qi,cosq")

    p = add("embed", cmd_embed, "Euclidean embedding of a metric file")
    p.add_argument("file")
    p.add_argument("--basepoint", type=int, default=0)

    p = add("gen", cmd_gen, "generate a metric file")
    _add_spec_flags(p)
    p.add_argument("--generator", choices=[g.value for g in spaces.Generator])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("strip-verify", cmd_strip_verify, "run the strip battery")
    _add_spec_flags(p)

    p = add("search", cmd_search, "hunt for separating four-point spaces")
    p.add_argument("--budget", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signature", default="", help="e.g. pt=1,qi=0,cosq=*")
    p.add_argument("--out")
    p.add_argument("--merge", help="existing catalog to merge into")
    p.add_argument("--max-witnesses", type=int, default=1000)
    p.add_argument("--show", type=int, default=10, help="witnesses echoed in the report")

    p = add("catalog", cmd_catalog, "emit the named four-point spaces")
    p.add_argument("--emit", required=True, help="output directory")
    p.add_argument("--e2-a", type=float, default=spaces.E2_DEFAULT_A)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report = {"schema": SCHEMA, "command": args.command}
    try:
        body = args.func(args)
    except (PtolemaicError, InputError, OSError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "indices", None):
            report["error"]["indices"] = list(exc.indices)
        print(json.dumps(report, indent=2))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.update(body)
    report["pass"] = all(c["pass"] for c in report["checks"])
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
