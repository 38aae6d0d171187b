"""Command-line entry point: ``python -m rigidity.cli <command> ...``.

Outputs are deterministic for fixed (command, flags, seed, inputs): artifacts
carry the package version, seed and SHA-256 of every input file, but no
timestamps or runtimes (those go to stderr).  Errors are one JSON object on
stderr with exit code 2; a failed verdict exits with 1.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .core import fmt_value, to_value, validate_distribution
from .divisible import (gen_family_member, gen_geometric, gen_k_excluded,
                        gen_random_high_values, parameters, validate_set)
from .embed import OMEGA, build_distribution
from .mech import (check_feasible, check_interim_ir, cm_fees, expost_revenue, interim_revenue,
                   lookahead)
from .serialize import (FormatError, alloc_from_json, dist_from_json, dumps,
                        embedding_from_json, embedding_to_json, file_hash, load,
                        mech_from_json, mech_to_json, params_to_json, set_from_json,
                        set_to_json)
from .verify import (DEFAULT_CAP, SearchCapExceeded, allocation_string,
                     brute_force_expost_opt, brute_force_interim_opt, corruption_curve,
                     kc_inequality, optimal_fees, rigidity_check)


class UsageError(Exception):
    pass


def _meta(args, inputs=()):
    out = {"version": __version__, "command": args.command}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if inputs:
        out["inputs"] = {p: file_hash(p) for p in inputs}
    return out


def _emit(text, path=None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _value(s):
    try:
        return to_value(s)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _pattern(s):
    try:
        return [[int(x) for x in part.split(",") if x.strip()] for part in s.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError("pattern looks like '1,2;2,3'")


# ------------------------------------------------------------------ commands

def cmd_gen(args):
    m = args.m
    if args.method == "rhv":
        s = gen_random_high_values(args.n, m, args.seed)
    elif args.method == "geo":
        s = gen_geometric(args.n, m, args.seed)
    elif args.method == "kexcluded":
        if args.k is None or args.eps is None:
            raise UsageError("kexcluded needs --k and --eps")
        s = gen_k_excluded(args.n, args.k, m, args.eps)
    else:
        if args.pattern is None:
            raise UsageError("family needs --pattern")
        s = gen_family_member(args.n, m, args.pattern, args.seed)
    out = set_to_json(s)
    out["meta"] = _meta(args)
    _emit(dumps(out), args.output)
    return 0


def cmd_params(args):
    s = set_from_json(load(args.set))
    v = validate_set(s)
    if not v:
        raise UsageError("invalid set: " + "; ".join(v.violations))
    _emit(dumps(params_to_json(parameters(s))))
    return 0


def cmd_embed(args):
    s = set_from_json(load(args.set))
    emb = build_distribution(s, args.omega)
    out = embedding_to_json(emb)
    out["meta"] = _meta(args, [args.set])
    _emit(dumps(out), args.output)
    return 0


def cmd_check(args):
    results, ok = [], True
    for path in args.files:
        obj = load(path)
        if args.kind == "dist":
            v = validate_distribution(dist_from_json(obj, validate=False))
            entry = {"file": path, "ok": v.ok, "violations": list(v.violations)}
        elif args.kind == "set":
            v = validate_set(set_from_json(obj))
            entry = {"file": path, "ok": v.ok, "violations": list(v.violations)}
        else:
            if not args.dist:
                raise UsageError("check mech needs --dist")
            d = dist_from_json(load(args.dist))
            mech, fees = mech_from_json(obj)
            feas = check_feasible(mech, d)
            entry = {"file": path, "feasible": feas.ok,
                     "conflicts": [[[fmt_value(x) for x in v], list(w)] for v, w in feas.violations]}
            if feas.ok:
                if fees is None:
                    fees, _ = optimal_fees(mech, d)
                ir = check_interim_ir(mech, fees, d)
                entry["interim_ir"] = ir.ok
                entry["ir_violations"] = [[i, fmt_value(vi), fmt_value(lhs), fmt_value(pi)]
                                          for i, vi, lhs, pi in ir.violations]
                entry["revenue"] = fmt_value(interim_revenue(mech, fees, d)) if ir.ok else None
            entry["ok"] = feas.ok and entry.get("interim_ir", False)
        ok &= entry["ok"]
        results.append(entry)
    _emit(dumps({"results": results, "ok": ok}))
    return 0 if ok else 1


def cmd_rigidity(args):
    emb = embedding_from_json(load(args.embedding))
    rep = rigidity_check(emb, mode=args.mode, count=args.count, seed=args.seed,
                         slack=args.slack, cap=args.cap)
    out = rep.to_dict()
    out.pop("runtime_s")
    out["meta"] = _meta(args, [args.embedding])
    _emit(dumps(out), args.output)
    sys.stderr.write(f"rigidity: mode={rep.mode} evaluated={rep.evaluated} "
                     f"runtime={rep.runtime:.1f}s ok={rep.ok}\n")
    return 0 if rep.ok else 1


def cmd_curve(args):
    emb = embedding_from_json(load(args.embedding))
    rows = corruption_curve(emb, args.fractions, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fraction", "x", "revenue_ratio", "bound", "revenue_ratio_float"])
    for f, x, ratio, bound in rows:
        w.writerow([fmt_value(f), fmt_value(x), fmt_value(ratio), fmt_value(bound),
                    f"{float(ratio):.6f}"])
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_bruteforce(args):
    d = dist_from_json(load(args.dist))
    if args.ir == "expost":
        mech, rev = brute_force_expost_opt(d, topk=args.topk, cap=args.cap)
        out = {"ir": "expost", "revenue": fmt_value(rev), "mechanism": mech_to_json(mech),
               "mode": "full"}
    else:
        if args.topk is not None:
            raise UsageError("--topk applies to --ir expost only")
        res = brute_force_interim_opt(d, cap=args.cap, seed=args.seed or 0)
        out = {"ir": "interim", "revenue": fmt_value(res.revenue), "mode": res.mode,
               "mechanism": mech_to_json(res.mechanism, res.fees)}
    out["meta"] = _meta(args, [args.dist])
    _emit(dumps(out))
    return 0


def cmd_lookahead(args):
    d = dist_from_json(load(args.dist))
    mech = lookahead(d)
    _emit(dumps({"revenue": fmt_value(expost_revenue(mech, d)), "mechanism": mech_to_json(mech)}))
    return 0


def cmd_cm(args):
    d = dist_from_json(load(args.dist))
    res = cm_fees(d)
    if not res.ok:
        _emit(dumps({"ok": False, "failure": res.failure}))
        return 1
    _emit(dumps({"ok": True, "revenue": fmt_value(interim_revenue(res.mechanism, res.fees, d)),
                 "mechanism": mech_to_json(res.mechanism, res.fees)}))
    return 0


def cmd_encode(args):
    d = dist_from_json(load(args.dist))
    alloc = alloc_from_json(load(args.alloc))
    _emit(allocation_string(d, alloc, args.order) + "\n")
    return 0


def cmd_kc(args):
    r = kc_inequality(args.k, args.r, args.g, args.n, args.t, args.x)
    _emit(dumps({"holds": r.holds, "lhs": fmt_value(r.lhs), "rhs": str(r.rhs)}))
    return 0


# ------------------------------------------------------------------ parser

def build_parser():
    p = argparse.ArgumentParser(prog="rigidity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an m-divisible set")
    g.add_argument("--method", choices=["rhv", "geo", "kexcluded", "family"], required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--eps", type=_value)
    g.add_argument("--pattern", type=_pattern, help="active sets, e.g. '1,2;2,3'")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("params", help="print g, alpha and c_S of a set")
    q.add_argument("set")
    q.set_defaults(func=cmd_params)

    e = sub.add_parser("embed", help="build the embedding distribution of a set")
    e.add_argument("set")
    e.add_argument("--omega", type=_value, default=OMEGA)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_embed)

    c = sub.add_parser("check", help="validate distributions, sets or mechanisms")
    c.add_argument("kind", choices=["dist", "set", "mech"])
    c.add_argument("files", nargs="+")
    c.add_argument("--dist", help="distribution for 'check mech'")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("rigidity", help="check both revenue bounds on an embedding")
    r.add_argument("embedding")
    r.add_argument("--mode", choices=["full", "sampled"], default="full")
    r.add_argument("--count", type=int, default=10000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--slack", type=_value)
    r.add_argument("--cap", type=int, default=DEFAULT_CAP)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_rigidity)

    cv = sub.add_parser("curve", help="corrupted-reference revenue curve (CSV)")
    cv.add_argument("embedding")
    cv.add_argument("--fractions", default="0,1/4,1/2,3/4,1",
                    type=lambda s: [_value(x) for x in s.split(",")])
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("-o", "--output")
    cv.set_defaults(func=cmd_curve)

    b = sub.add_parser("bruteforce", help="optimal deterministic mechanism by search")
    b.add_argument("dist")
    b.add_argument("--ir", choices=["expost", "interim"], default="expost")
    b.add_argument("--topk", type=int)
    b.add_argument("--cap", type=int, default=DEFAULT_CAP)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bruteforce)

    la = sub.add_parser("lookahead", help="lookahead auction revenue")
    la.add_argument("dist")
    la.set_defaults(func=cmd_lookahead)

    cm = sub.add_parser("cm", help="full-surplus-extraction fees")
    cm.add_argument("dist")
    cm.set_defaults(func=cmd_cm)

    en = sub.add_parser("encode", help="allocation string of an allocation")
    en.add_argument("dist")
    en.add_argument("alloc")
    en.add_argument("--order", choices=["cm", "lex"], default="cm")
    en.set_defaults(func=cmd_encode)

    kc = sub.add_parser("kc-check", help="evaluate the counting inequality")
    for name in ("k", "r", "g", "n", "t"):
        kc.add_argument(f"--{name}", type=int, required=True)
    kc.add_argument("--x", type=_value, required=True)
    kc.set_defaults(func=cmd_kc)
    return p


def _fail(kind, msg):
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
    return 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse already printed usage
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line")
    try:
        return args.func(args)
    except FormatError as exc:
        return _fail("format", str(exc))
    except FileNotFoundError as exc:
        return _fail("io", str(exc))
    except SearchCapExceeded as exc:
        return _fail("cap", str(exc))
    except UsageError as exc:
        return _fail("usage", str(exc))
    except (ValueError, TypeError, RuntimeError) as exc:
        return _fail("invalid", str(exc))


if __name__ == "__main__":
    sys.exit(main())
