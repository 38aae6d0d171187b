"""m-divisible partial allocation sets: representation, validation, the
(g, alpha, c_S) parameters and the explicit generators.

Players and subsets are 0-indexed throughout the code (player 0 is "player 1"
in the usual math notation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .core import Verdict, to_value

BITS = 32
MAX_RETRIES = 1000


@dataclass(frozen=True)
class MDivisibleSet:
    n: int
    m: int
    base_vectors: tuple          # m tuples of n Fractions
    active_sets: tuple           # m sorted tuples of player indices
    thresholds: dict = field(hash=False, compare=True)  # {(j, i): u_ij}

    @classmethod
    def make(cls, n, m, base_vectors, active_sets, thresholds):
        bv = tuple(tuple(to_value(x) for x in v) for v in base_vectors)
        act = tuple(tuple(sorted(int(i) for i in a)) for a in active_sets)
        th = {(int(j), int(i)): to_value(u) for (j, i), u in dict(thresholds).items()}
        return cls(int(n), int(m), bv, act, th)

    def v(self, i, j) -> Fraction:
        return self.base_vectors[j][i]

    def u(self, i, j) -> Fraction:
        return self.thresholds[(j, i)]

    @cached_property
    def pairs(self) -> tuple:
        """(j, i) for i in A_j, in (j, i) order -- the instances of S."""
        return tuple((j, i) for j in range(self.m) for i in self.active_sets[j])

    @cached_property
    def active_players(self) -> tuple:
        return tuple(sorted({i for a in self.active_sets for i in a}))

    def subsets_of(self, i) -> tuple:
        """A^i = {j : i in A_j}."""
        return tuple(j for j in range(self.m) if i in self.active_sets[j])

    @property
    def size(self) -> int:
        return len(self.pairs)

    def instance(self, j, i) -> tuple:
        """(u_ij, (v_j)_{-i}), the point of S allocated to i."""
        v = list(self.base_vectors[j])
        v[i] = self.u(i, j)
        return tuple(v)


def validate_set(s: MDivisibleSet) -> Verdict:
    bad = []
    if s.n <= 2:
        bad.append(f"n <= 2 (n={s.n})")
    if len(s.base_vectors) != s.m or len(s.active_sets) != s.m:
        bad.append("need exactly m base vectors and m active sets")
        return Verdict(False, tuple(bad))
    for j, v in enumerate(s.base_vectors):
        if len(v) != s.n:
            bad.append(f"base vector {j} has length {len(v)}")
        if any(x <= 0 for x in v):
            bad.append(f"nonpositive value in base vector {j}")
    for j, a in enumerate(s.active_sets):
        if not a:
            bad.append(f"empty active set A_{j}")
        if any(not 0 <= i < s.n for i in a):
            bad.append(f"active set A_{j} has out-of-range player")
    if bad:
        return Verdict(False, tuple(bad))
    expected = set(s.pairs)
    if set(s.thresholds) != expected:
        bad.append("thresholds must be given exactly for (j, i in A_j)")
        return Verdict(False, tuple(bad))
    for j, i in s.pairs:
        if not s.u(i, j) > s.v(i, j):
            bad.append(f"threshold not above base value (j={j}, i={i})")
    for i in range(s.n):
        for j in range(s.m):
            for k in range(j + 1, s.m):
                if s.v(i, j) == s.v(i, k):
                    bad.append(f"sparsity violated (j={j}, k={k}, i={i})")
    for i in range(s.n):
        us = [s.u(i, j) for j in s.subsets_of(i)]
        if len(set(us)) != len(us):
            bad.append(f"threshold collision among player {i}'s thresholds")
        vs = {s.v(i, j) for j in range(s.m)}
        for j in s.subsets_of(i):
            if s.u(i, j) in vs:
                bad.append(f"threshold collision: u_(i={i}, j={j}) equals a base value")
    return Verdict(not bad, tuple(bad))


@dataclass(frozen=True)
class SetParameters:
    a: int
    g_per_player: dict
    g_avg: Fraction
    alpha_per_subset: dict
    alpha_avg: Fraction
    c_S: Fraction
    size: int
    y: dict        # i -> (y_i1 < ... < y_ik)
    sigma: dict    # (i, j) -> rank r in 1..k_i
    d: dict        # i -> d_i = 1/g_i

    def k(self, i) -> int:
        return len(self.y[i])


def parameters(s: MDivisibleSet) -> SetParameters:
    y, sigma, d, g = {}, {}, {}, {}
    for i in s.active_players:
        js = s.subsets_of(i)
        order = sorted(js, key=lambda j: s.v(i, j))
        y[i] = tuple(s.v(i, j) for j in order)
        for r, j in enumerate(order, start=1):
            sigma[(i, j)] = r
        if len(order) == 1:
            d[i] = Fraction(1, 2)  # empty ratio set; keeps y_{k+1} finite
        else:
            d[i] = 1 - max(y[i][r] / y[i][r + 1] for r in range(len(order) - 1))
        g[i] = 1 / d[i]
    alpha = {}
    for j in range(s.m):
        gap = min(s.u(i, j) - s.v(i, j) for i in s.active_sets[j])
        alpha[j] = max(s.base_vectors[j]) / gap
    a = len(s.active_players)
    g_avg = sum(g.values(), Fraction(0)) / a
    alpha_avg = sum(alpha.values(), Fraction(0)) / s.m
    c_S = (a * g_avg + s.m * alpha_avg) / s.size
    return SetParameters(a, g, g_avg, alpha, alpha_avg, c_S, s.size, y, sigma, d)


# ---------------------------------------------------------------- generators

class Sampler:
    """Exact uniform draws t/2^BITS over an interval, from a PCG64 stream."""

    def __init__(self, seed):
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def unit(self) -> Fraction:
        return Fraction(int(self.rng.integers(0, 2 ** BITS)), 2 ** BITS)

    def uniform(self, lo, hi) -> Fraction:
        lo, hi = Fraction(lo), Fraction(hi)
        return lo + (hi - lo) * self.unit()

    def coin(self) -> bool:
        return bool(self.rng.integers(0, 2))


def _tie_offset(values) -> Fraction:
    """tau = smallest positive gap among the values / 4."""
    xs = sorted(set(values))
    gaps = [b - a for a, b in zip(xs, xs[1:])]
    return min(gaps) / 4 if gaps else Fraction(1, 4)


def _fresh(sampler, lo, hi, taken):
    for _ in range(MAX_RETRIES):
        x = sampler.uniform(lo, hi)
        if x not in taken:
            return x
    raise RuntimeError("generator stuck")


def _finish(n, m, base, active, raw, seen):
    tau = _tie_offset(seen)
    th = {(j, i): u + tau for (j, i), u in raw.items()}
    return MDivisibleSet.make(n, m, base, active, th)


def gen_random_high_values(n: int, m: int, seed: int) -> MDivisibleSet:
    """Random high values: about half the players are active per round, active
    values shrink geometrically, thresholds and inactive values live in [1/2, 1]."""
    if n <= 2 or m < 1:
        raise ValueError("need n > 2 and m >= 1")
    sm = Sampler(seed)
    for _ in range(MAX_RETRIES):
        last = [Fraction(1, 2)] * n      # v_0, every entry in (0, 1]
        taken = [set() for _ in range(n)]
        base, active, raw, seen = [], [], {}, []
        for j in range(m):
            while True:
                a = [i for i in range(n) if sm.coin()]
                if a:
                    break
            vj = []
            for i in range(n):
                if i in a:
                    x = last[i] / sm.uniform(2, 4)
                    last[i] = x
                else:
                    x = _fresh(sm, Fraction(1, 2), 1, taken[i])
                taken[i].add(x)
                vj.append(x)
            for i in a:
                raw[(j, i)] = _fresh(sm, Fraction(1, 2), 1, taken[i])
            base.append(vj)
            active.append(a)
            seen += vj + [raw[(j, i)] for i in a]
        s = _finish(n, m, base, active, raw, seen)
        if validate_set(s):
            return s
    raise RuntimeError("generator stuck")


def gen_geometric(n: int, m: int, seed: int) -> MDivisibleSet:
    """Geometrically increasing base vectors; everyone active every round."""
    if n <= 2 or m < 1:
        raise ValueError("need n > 2 and m >= 1")
    sm = Sampler(seed)
    for _ in range(MAX_RETRIES):
        cur = [Fraction(1)] * n
        base, raw, seen = [], {}, []
        for j in range(m):
            cur = [x * sm.uniform(2, 4) for x in cur]
            base.append(list(cur))
            for i in range(n):
                raw[(j, i)] = sm.uniform(2 * cur[i], 4 * cur[i])
            seen += cur + [raw[(j, i)] for i in range(n)]
        active = [list(range(n))] * m
        s = _finish(n, m, base, active, raw, seen)
        if validate_set(s):
            return s
    raise RuntimeError("generator stuck")


def gen_k_excluded(n: int, k: int, m: int, eps) -> MDivisibleSet:
    """Deterministic set where the winner is never among the k highest bidders."""
    eps = to_value(eps)
    if not (0 < eps < 1):
        raise ValueError("need 0 < eps < 1")
    if not (1 <= k < n - 2):
        raise ValueError("need 1 <= k < n - 2")
    if m < 1:
        raise ValueError("need m >= 1")
    na = n - k
    base, th = [], {}
    for j in range(1, m + 1):
        x = (1 + eps) / eps ** j + (1 + eps)
        base.append([eps ** (1 - j)] * na + [x] * k)
        for i in range(na):
            th[(j - 1, i)] = x - eps
    return MDivisibleSet.make(n, m, base, [list(range(na))] * m, th)


def gen_family_member(n: int, m: int, pattern, seed: int) -> MDivisibleSet:
    """One member of the family indexed by active-set patterns: player 0 never
    active and always the strict maximum of every instance of S."""
    pattern = [sorted(set(int(i) for i in p)) for p in pattern]
    if n <= 2 or m < 1 or len(pattern) != m:
        raise ValueError("need n > 2, m >= 1 and m pattern sets")
    if any(not p or any(not 1 <= i < n for i in p) for p in pattern):
        raise ValueError("pattern sets must be nonempty subsets of players 1..n-1")
    if len({len(p) for p in pattern}) != 1:
        raise ValueError("pattern sets must share one target size")
    sm = Sampler(seed)
    for _ in range(MAX_RETRIES):
        last = [Fraction(1, 2)] * n
        taken = [set() for _ in range(n)]
        base, raw, seen = [], {}, []
        for j, a in enumerate(pattern):
            vj = [None] * n
            for i in range(1, n):
                if i in a:
                    last[i] = last[i] / sm.uniform(2, 4)
                    vj[i] = last[i]
                else:
                    vj[i] = _fresh(sm, Fraction(1, 2), 1, taken[i])
                taken[i].add(vj[i])
            for i in a:
                raw[(j, i)] = _fresh(sm, Fraction(1, 2), 1, taken[i])
            base.append(vj)
            seen += vj[1:] + [raw[(j, i)] for i in a]
        tau = _tie_offset(seen)
        th = {key: u + tau for key, u in raw.items()}
        for j, a in enumerate(pattern):
            top = max(th[(j, i)] for i in a)
            base[j][0] = _fresh(sm, top, 1, taken[0] | {top})
            taken[0].add(base[j][0])
        s = MDivisibleSet.make(n, m, base, pattern, th)
        if validate_set(s) and all(s.instance(j, i)[0] > max(s.instance(j, i)[1:])
                                   for j, i in s.pairs):
            return s
    raise RuntimeError("generator stuck")
