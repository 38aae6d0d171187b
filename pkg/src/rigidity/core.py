"""Exact-arithmetic foundation: values, finite joint distributions, conditional
probability matrices, welfare and rank checks.

Every scalar is a ``fractions.Fraction``.  The only non-rational value that ever
appears is ``INF`` (a threshold meaning "never wins"); it is compared, never
multiplied.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Value = Fraction
Instance = tuple  # tuple[Fraction, ...]
INF = math.inf


def to_value(x) -> Fraction | float:
    """Parse ``x`` into an exact rational.

    Accepts Fractions, ints, "p/q" strings, decimal literals ("0.1" -> 1/10) and
    "inf".  Floats are rejected: they would smuggle rounding in.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a value")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if x == INF:
            return INF
        raise TypeError(f"refusing float {x!r}; pass a string or Fraction")
    if isinstance(x, str):
        s = x.strip()
        if s.lower() in ("inf", "+inf", "infinity"):
            return INF
        if "/" in s:
            p, q = s.split("/", 1)
            q = int(q)
            if q == 0:
                raise ValueError(f"zero denominator in {x!r}")
            return Fraction(int(p), q)
        try:
            return Fraction(Decimal(s))
        except InvalidOperation:
            raise ValueError(f"not a rational: {x!r}") from None
    raise TypeError(f"cannot convert {type(x).__name__} to a value")


def fmt_value(x) -> str:
    """Canonical string: "p/q" (integers as "k/1"), or "inf"."""
    if x == INF:
        return "inf"
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def as_instance(values: Iterable) -> Instance:
    return tuple(to_value(v) for v in values)


def drop(v: Sequence, i: int) -> tuple:
    """v_{-i}: the opponent profile of player i."""
    return tuple(v[:i]) + tuple(v[i + 1:])


def insert(profile: Sequence, i: int, vi) -> tuple:
    """Inverse of ``drop``: rebuild (v_i, v_{-i})."""
    return tuple(profile[:i]) + (vi,) + tuple(profile[i:])


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class JointDistribution:
    """Finite support of instances with rational probabilities.

    Construction does not validate (so broken inputs can be reported); call
    ``validate_distribution`` or use ``JointDistribution.make``.
    """
    n: int
    support: tuple  # ((Instance, Fraction), ...)

    @classmethod
    def make(cls, pairs, n: int | None = None) -> "JointDistribution":
        pairs = tuple((as_instance(v), to_value(p)) for v, p in pairs)
        if n is None:
            n = len(pairs[0][0]) if pairs else 0
        d = cls(n, pairs)
        verdict = validate_distribution(d)
        if not verdict.ok:
            raise ValueError("; ".join(verdict.violations))
        return d

    @classmethod
    def uniform(cls, instances) -> "JointDistribution":
        inst = list(instances)
        return cls.make([(v, Fraction(1, len(inst))) for v in inst])

    def __len__(self):
        return len(self.support)

    def __iter__(self):
        return iter(self.support)

    @cached_property
    def prob(self) -> dict:
        return {v: p for v, p in self.support}

    @cached_property
    def _index(self):
        """Per-player joint tables Pr(v_i, v_{-i}) and marginals."""
        joint = [defaultdict(Fraction) for _ in range(self.n)]
        row_mass = [defaultdict(Fraction) for _ in range(self.n)]
        col_mass = [defaultdict(Fraction) for _ in range(self.n)]
        for v, p in self.support:
            for i in range(self.n):
                prof = drop(v, i)
                joint[i][(v[i], prof)] += p
                row_mass[i][v[i]] += p
                col_mass[i][prof] += p
        return joint, row_mass, col_mass

    def values_of(self, i: int) -> list:
        """D_i in ascending order."""
        return sorted(self._index[1][i])

    def profiles_of(self, i: int) -> list:
        """D_{-i} in lexicographic order."""
        return sorted(self._index[2][i])

    def pr_value(self, i, vi) -> Fraction:
        return self._index[1][i].get(vi, Fraction(0))

    def pr_profile(self, i, prof) -> Fraction:
        return self._index[2][i].get(tuple(prof), Fraction(0))

    def joint_table(self, i: int) -> dict:
        """{(v_i, v_{-i}): Pr} for player i."""
        return self._index[0][i]


def validate_distribution(d: JointDistribution) -> Verdict:
    bad = []
    seen = set()
    total = Fraction(0)
    for v, p in d.support:
        if len(v) != d.n:
            bad.append(f"instance {v} has length {len(v)} != n={d.n}")
        if any(x < 0 for x in v):
            bad.append(f"negative value in instance {v}")
        if v in seen:
            bad.append(f"duplicate instance {v}")
        seen.add(v)
        if not p > 0:
            bad.append(f"nonpositive probability {p} at {v}")
        total += p
    if total != 1:
        bad.append(f"probabilities do not sum to 1 (sum={total})")
    return Verdict(not bad, tuple(bad))


@dataclass(frozen=True)
class CPMatrix:
    player: int
    row_labels: tuple
    col_labels: tuple
    entries: tuple  # tuple of row tuples

    def row(self, vi) -> tuple:
        return self.entries[self.row_labels.index(vi)]


def cp_matrix(d: JointDistribution, i: int) -> CPMatrix:
    if not 0 <= i < d.n:
        raise IndexError(f"player {i} out of range")
    rows = d.values_of(i)
    cols = d.profiles_of(i)
    joint = d.joint_table(i)
    entries = []
    for vi in rows:
        pv = d.pr_value(i, vi)
        entries.append(tuple(joint.get((vi, c), Fraction(0)) / pv for c in cols))
    return CPMatrix(i, tuple(rows), tuple(cols), tuple(entries))


def marginal(d: JointDistribution, i: int) -> list:
    return [(vi, d.pr_value(i, vi)) for vi in d.values_of(i)]


def expected_welfare(d: JointDistribution) -> Fraction:
    return sum((p * max(v) for v, p in d.support), Fraction(0))


def rank(matrix) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination.

    Rows are scaled to integers first, so every intermediate stays integral.
    """
    rows = []
    for r in matrix:
        r = [Fraction(x) for x in r]
        den = 1
        for x in r:
            den = math.lcm(den, x.denominator)
        rows.append([int(x * den) for x in r])
    if not rows:
        return 0
    m, n = len(rows), len(rows[0])
    a = rows
    rk, prev = 0, 1
    for col in range(n):
        piv = next((r for r in range(rk, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rk], a[piv] = a[piv], a[rk]
        for r in range(rk + 1, m):
            for c in range(col + 1, n):
                a[r][c] = (a[rk][col] * a[r][c] - a[r][col] * a[rk][c]) // prev
            a[r][col] = 0
        prev = a[rk][col]
        rk += 1
        if rk == m:
            break
    return rk


@dataclass(frozen=True)
class FullRankReport:
    per_player: tuple
    ok: bool


def full_rank_check(d: JointDistribution) -> FullRankReport:
    per = []
    for i in range(d.n):
        cp = cp_matrix(d, i)
        per.append(rank(cp.entries) == len(cp.row_labels))
    return FullRankReport(tuple(per), all(per))
