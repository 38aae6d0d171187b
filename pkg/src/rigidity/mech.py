"""Deterministic DSIC mechanisms in standard form: an ex-post IR threshold
mechanism plus per-player entry fees c_i(v_-i).

Win rule is inclusive: i wins at v iff v_i >= t_i(v_-i), and then pays t_i.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .core import INF, JointDistribution, Verdict, cp_matrix, drop, full_rank_check
from .lp import solve_exact


@dataclass(frozen=True)
class ThresholdMechanism:
    n: int
    thresholds: dict = field(default_factory=dict, hash=False)  # (i, v_-i) -> t

    def t(self, i, prof):
        return self.thresholds.get((i, tuple(prof)), INF)

    def replace(self, updates) -> "ThresholdMechanism":
        th = dict(self.thresholds)
        th.update(updates)
        return ThresholdMechanism(self.n, th)


@dataclass(frozen=True)
class FeeSchedule:
    fees: dict = field(default_factory=dict, hash=False)  # (i, v_-i) -> c

    def c(self, i, prof) -> Fraction:
        return self.fees.get((i, tuple(prof)), Fraction(0))


def winners(mech: ThresholdMechanism, v) -> list:
    return [i for i in range(mech.n) if v[i] >= mech.t(i, drop(v, i))]


def allocation(mech: ThresholdMechanism, v):
    w = winners(mech, v)
    if len(w) > 1:
        raise ValueError(f"infeasible: players {w} all win at {tuple(v)}")
    return w[0] if w else None


def check_feasible(mech: ThresholdMechanism, d: JointDistribution) -> Verdict:
    bad = [(v, tuple(w)) for v, _ in d for w in [winners(mech, v)] if len(w) > 1]
    return Verdict(not bad, tuple(bad))


def expost_revenue(mech: ThresholdMechanism, d: JointDistribution) -> Fraction:
    tot = Fraction(0)
    for v, p in d:
        i = allocation(mech, v)
        if i is not None:
            tot += p * mech.t(i, drop(v, i))
    return tot


def profit_vector(mech: ThresholdMechanism, d: JointDistribution) -> dict:
    """{i: {v_i: pi_i(v_i)}} -- expected profit conditional on v_i."""
    acc = [defaultdict(Fraction) for _ in range(d.n)]
    for v, p in d:
        i = allocation(mech, v)
        if i is not None:
            acc[i][v[i]] += p * (v[i] - mech.t(i, drop(v, i)))
    return {i: {vi: acc[i][vi] / d.pr_value(i, vi) for vi in d.values_of(i)}
            for i in range(d.n)}


def expected_fee(fees: FeeSchedule, d: JointDistribution, i, vi=None) -> Fraction:
    """E[c_i(v_-i)], or E[c_i(v_-i) | v_i] when vi is given."""
    if vi is None:
        return sum((d.pr_profile(i, c) * fees.c(i, c) for c in d.profiles_of(i)), Fraction(0))
    joint = d.joint_table(i)
    tot = sum((p * fees.c(i, prof) for (x, prof), p in joint.items() if x == vi), Fraction(0))
    return tot / d.pr_value(i, vi)


def check_interim_ir(mech, fees, d: JointDistribution) -> Verdict:
    """[CP_i c_i]_k <= pi_i(v_i^k) for all i, k (exact)."""
    pv = profit_vector(mech, d)
    load = [defaultdict(Fraction) for _ in range(d.n)]
    for i in range(d.n):
        for (vi, prof), p in d.joint_table(i).items():
            c = fees.c(i, prof)
            if c:
                load[i][vi] += p * c
    bad = []
    for i in range(d.n):
        for vi in d.values_of(i):
            lhs = load[i][vi] / d.pr_value(i, vi)
            if lhs > pv[i][vi]:
                bad.append((i, vi, lhs, pv[i][vi]))
    return Verdict(not bad, tuple(bad))


def interim_revenue(mech, fees, d: JointDistribution) -> Fraction:
    return expost_revenue(mech, d) + sum((expected_fee(fees, d, i) for i in range(d.n)),
                                         Fraction(0))


def agreement_ratio(mech: ThresholdMechanism, s):
    """x = share of S's instances (u_ij, (v_j)_-i) that mech gives to i."""
    chi = {}
    for j, i in s.pairs:
        v = s.instance(j, i)
        chi[(i, j)] = int(v[i] >= mech.t(i, drop(v, i)))
    x = Fraction(sum(chi.values()), len(chi))
    return x, chi


def is_highest(v, i) -> bool:
    """i is the top bidder with ties broken toward the lowest index."""
    return all(v[i] > v[k] for k in range(i)) and all(v[i] >= v[k] for k in range(i + 1, len(v)))


def _cells(d: JointDistribution):
    """{(i, v_-i): [(v_i, Pr)]} sorted by v_i."""
    cells = defaultdict(list)
    for i in range(d.n):
        for (vi, prof), p in d.joint_table(i).items():
            cells[(i, prof)].append((vi, p))
    for rows in cells.values():
        rows.sort()
    return cells


def lookahead(d: JointDistribution) -> ThresholdMechanism:
    """Sell only to the highest bidder at the revenue-maximising price given v_-i."""
    th = {}
    for (i, prof), rows in _cells(d).items():
        top = [(vi, p) for vi, p in rows if is_highest(_join(prof, i, vi), i)]
        if not top:
            continue
        best, price = None, None
        for k, (vi, _) in enumerate(top):
            rev = vi * sum(p for _, p in top[k:])
            if best is None or rev > best:
                best, price = rev, vi
        th[(i, prof)] = price
    return ThresholdMechanism(d.n, th)


def _join(prof, i, vi):
    return tuple(prof[:i]) + (vi,) + tuple(prof[i:])


def second_price(d: JointDistribution) -> ThresholdMechanism:
    """Highest bidder wins (lowest index on ties).  The threshold is the highest
    opponent bid, nudged up to i's next support value when a tie would go to a
    lower-indexed opponent."""
    th = {}
    for (i, prof), rows in _cells(d).items():
        wins = [vi for vi, _ in rows if is_highest(_join(prof, i, vi), i)]
        if not wins:
            continue
        top = max(prof)
        lower_tie = any(prof[k] == top for k in range(i))
        th[(i, prof)] = min(wins) if lower_tie else top
    return ThresholdMechanism(d.n, th)


@dataclass(frozen=True)
class CMResult:
    ok: bool
    mechanism: ThresholdMechanism | None = None
    fees: FeeSchedule | None = None
    failure: str | None = None


def cm_fees(d: JointDistribution) -> CMResult:
    """Full-surplus extraction: solve CP_i c_i = pi_i under a second-price auction."""
    fr = full_rank_check(d)
    for i, ok in enumerate(fr.per_player):
        if not ok:
            return CMResult(False, failure=f"rank deficient (player {i})")
    mech = second_price(d)
    pv = profit_vector(mech, d)
    fees = {}
    for i in range(d.n):
        cp = cp_matrix(d, i)
        sol = solve_exact([list(r) for r in cp.entries], [pv[i][vi] for vi in cp.row_labels])
        if sol is None:
            return CMResult(False, failure=f"system inconsistent (player {i})")
        for prof, c in zip(cp.col_labels, sol):
            if c:
                fees[(i, prof)] = c
    return CMResult(True, mech, FeeSchedule(fees))
