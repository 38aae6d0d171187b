"""JSON formats for distributions, sets, mechanisms, embeddings and allocations.

Values are written as exact strings ("p/q" or "inf"); players and subsets are
0-indexed.  Embeddings are stored as (set, omega) plus the derived distribution;
loading rebuilds from (set, omega) and refuses a file whose distribution does
not match the rebuild.
"""
from __future__ import annotations

import hashlib
import json

from .core import INF, JointDistribution, as_instance, fmt_value, to_value, validate_distribution
from .divisible import MDivisibleSet, SetParameters
from .mech import FeeSchedule, ThresholdMechanism


class FormatError(ValueError):
    pass


def _vals(xs):
    return [fmt_value(x) for x in xs]


def _need(obj, *keys):
    if not isinstance(obj, dict):
        raise FormatError("expected a JSON object")
    for k in keys:
        if k not in obj:
            raise FormatError(f"missing key {k!r}")


# ---------------------------------------------------------------- distribution

def dist_to_json(d: JointDistribution) -> dict:
    return {"n": d.n, "support": [[_vals(v), fmt_value(p)] for v, p in d]}


def dist_from_json(obj, validate=True) -> JointDistribution:
    _need(obj, "support")
    try:
        pairs = tuple((as_instance(v), to_value(p)) for v, p in obj["support"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad support entry: {exc}") from None
    n = obj.get("n", len(pairs[0][0]) if pairs else 0)
    d = JointDistribution(int(n), pairs)
    if validate:
        verdict = validate_distribution(d)
        if not verdict.ok:
            raise FormatError("; ".join(verdict.violations))
    return d


# ---------------------------------------------------------------- sets

def set_to_json(s: MDivisibleSet) -> dict:
    return {"n": s.n, "m": s.m,
            "base_vectors": [_vals(v) for v in s.base_vectors],
            "active_sets": [list(a) for a in s.active_sets],
            "thresholds": [{"j": j, "i": i, "u": fmt_value(s.u(i, j))} for j, i in s.pairs]}


def set_from_json(obj) -> MDivisibleSet:
    _need(obj, "n", "m", "base_vectors", "active_sets", "thresholds")
    try:
        th = {(int(t["j"]), int(t["i"])): t["u"] for t in obj["thresholds"]}
        return MDivisibleSet.make(obj["n"], obj["m"], obj["base_vectors"], obj["active_sets"], th)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad set: {exc}") from None


def params_to_json(p: SetParameters) -> dict:
    return {"a": p.a, "size": p.size, "c_S": fmt_value(p.c_S),
            "g_avg": fmt_value(p.g_avg), "alpha_avg": fmt_value(p.alpha_avg),
            "g": {str(i): fmt_value(g) for i, g in p.g_per_player.items()},
            "alpha": {str(j): fmt_value(x) for j, x in p.alpha_per_subset.items()},
            "d": {str(i): fmt_value(x) for i, x in p.d.items()},
            "y": {str(i): _vals(ys) for i, ys in p.y.items()}}


# ---------------------------------------------------------------- mechanisms

def mech_to_json(mech: ThresholdMechanism, fees: FeeSchedule | None = None) -> dict:
    out = {"n": mech.n,
           "thresholds": [{"i": i, "profile": _vals(col), "t": fmt_value(t)}
                          for (i, col), t in sorted(mech.thresholds.items())]}
    if fees is not None:
        out["fees"] = [{"i": i, "profile": _vals(col), "c": fmt_value(c)}
                       for (i, col), c in sorted(fees.fees.items())]
    return out


def mech_from_json(obj):
    """-> (ThresholdMechanism, FeeSchedule or None)."""
    _need(obj, "n", "thresholds")
    try:
        th = {}
        for t in obj["thresholds"]:
            val = to_value(t["t"])
            if val != INF:
                th[(int(t["i"]), as_instance(t["profile"]))] = val
        fees = None
        if "fees" in obj:
            fees = FeeSchedule({(int(c["i"]), as_instance(c["profile"])): to_value(c["c"])
                                for c in obj["fees"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad mechanism: {exc}") from None
    return ThresholdMechanism(int(obj["n"]), th), fees


# ---------------------------------------------------------------- embeddings

def embedding_to_json(emb) -> dict:
    c = emb.constants
    consts = {"delta": fmt_value(c.delta), "omega": fmt_value(c.omega), "mu": fmt_value(c.mu),
              "eps": fmt_value(c.eps), "e": fmt_value(c.e), "xi": fmt_value(c.xi),
              "y": {str(i): _vals(v) for i, v in c.y.items()},
              "q": {str(i): _vals(v) for i, v in c.q.items()},
              "delta_j": {str(j): fmt_value(x) for j, x in c.delta_j.items()},
              "fee_cap": {str(j): fmt_value(x) for j, x in c.fee_cap.items()},
              "filler_mass": fmt_value(c.filler_mass)}
    return {"set": set_to_json(emb.set), "omega": fmt_value(c.omega),
            "params": params_to_json(emb.params), "constants": consts,
            "support_size": len(emb.distribution),
            "distribution": dist_to_json(emb.distribution),
            "tags": [[_vals(v), list(emb.tags[v])] for v, _ in emb.distribution]}


def embedding_from_json(obj):
    from .embed import build_distribution
    _need(obj, "set")
    s = set_from_json(obj["set"])
    omega = to_value(obj.get("omega", "1/20"))
    emb = build_distribution(s, omega)
    if "distribution" in obj:
        stored = dist_from_json(obj["distribution"], validate=False)
        if dict(stored.support) != dict(emb.distribution.support):
            raise FormatError("stored distribution does not match the rebuilt embedding")
    return emb


# ---------------------------------------------------------------- allocations

def alloc_from_json(obj) -> dict:
    _need(obj, "allocation")
    out = {}
    for entry in obj["allocation"]:
        w = entry.get("winner")
        out[as_instance(entry["instance"])] = None if w is None else int(w)
    return out


def alloc_to_json(alloc: dict) -> dict:
    return {"allocation": [{"instance": _vals(v), "winner": w}
                           for v, w in sorted(alloc.items())]}


# ---------------------------------------------------------------- files

def load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON in {path}: {exc}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def file_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()

