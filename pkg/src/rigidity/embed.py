"""Embedding an m-divisible set S into a rigid distribution F_S, plus the two
reference interim IR mechanisms that certify its revenue.

The distribution is a union of four blocks and one filler point:

  P   one equal-revenue ladder per active player (others sit at a tiny rho_i)
  E   the base vectors v_j
  O   (u'_ij, (v_j)_-i) and (u_ij, (v_j)_-i): S's own instances, plus a twin
      that caps the fee collectable at (v_j)_-i
  R   tiny-valued probes that kill fees on profiles outside S's base columns
  FILLER  one all-tiny instance carrying the leftover mass
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import INF, JointDistribution, drop, validate_distribution
from .divisible import MDivisibleSet, SetParameters, parameters, validate_set
from .mech import FeeSchedule, ThresholdMechanism

DELTA = Fraction(1, 10)
OMEGA = Fraction(1, 20)


@dataclass(frozen=True)
class EmbeddingConstants:
    delta: Fraction
    omega: Fraction
    mu: Fraction
    eps_dev: Fraction
    eps: Fraction            # winning-threshold offset over v_ij
    e: Fraction
    y: dict                  # i -> (y_i0, y_i1, ..., y_i,k+1)
    q: dict                  # i -> (q_i0, ..., q_i,k+1)
    fee_cap: dict            # j -> min_k(u'_kj - v_kj) - eps
    delta_j: dict
    xi: Fraction
    rho: dict
    eta: dict                # ("single", i) / ("pair", i, j, k) / ("pair'", i, j, k)
    u_bar: dict              # (i, j) -> u_ij
    u_prime: dict            # (i, j) -> u'_ij
    filler_values: tuple
    filler_mass: Fraction

    def y0(self, i):
        return self.y[i][0]

    def y_top(self, i):
        return self.y[i][-1]


@dataclass(frozen=True)
class Embedding:
    set: MDivisibleSet
    params: SetParameters
    constants: EmbeddingConstants
    distribution: JointDistribution
    tags: dict = field(hash=False)   # instance -> tag tuple

    def p_column(self, i) -> tuple:
        """(rho_i, ..., rho_i): the opponent profile of i's equal-revenue block."""
        return (self.constants.rho[i],) * (self.set.n - 1)

    def base_column(self, i, j) -> tuple:
        return drop(self.set.base_vectors[j], i)

    def counted_support_bound(self) -> int:
        s = self.set
        return s.size + 3 * self.params.a + s.m + 2 * sum(len(a) ** 2 for a in s.active_sets) + 1

    def stated_support_bound(self) -> int:
        s = self.set
        return 5 * s.size + s.m + 2 * sum(len(a) ** 2 for a in s.active_sets)

    def p_mass(self) -> Fraction:
        return sum((p for v, p in self.distribution if self.tags[v][0] == "P"), Fraction(0))


def resolve_constants(s: MDivisibleSet, omega=OMEGA) -> EmbeddingConstants:
    if not validate_set(s):
        raise ValueError("invalid m-divisible set")
    omega = Fraction(omega)
    if not 0 < omega < Fraction(1, 10):
        raise ValueError("need 0 < omega < 1/10")
    par = parameters(s)
    n, m, a = s.n, s.m, par.a
    delta = DELTA
    act = s.active_players

    u_bar = {(i, j): s.u(i, j) for j, i in s.pairs}
    gap = {j: min(s.u(k, j) - s.v(k, j) for k in s.active_sets[j]) for j in range(m)}
    eps_dev = min(2 * min(gap.values()), omega) / 2
    u_prime = {}
    for idx, (j, i) in enumerate(s.pairs):
        u_prime[(i, j)] = s.v(i, j) + gap[j] - gap[j] / (4 * (idx + 2))
    eps = min(u_prime[(i, j)] - s.v(i, j) for j, i in s.pairs) / 2
    fee_cap = {j: min(u_prime[(k, j)] - s.v(k, j) for k in s.active_sets[j]) - eps
               for j in range(m)}

    # mu needs y0, y0 needs e, e needs mu: solve with the y0-free part first;
    # shrinking mu afterwards only loosens the fee constraint.
    big = 5 * n * m + 3 * n + n * n + n * n * m
    min_v = min(x for v in s.base_vectors for x in v)
    mu_pre = min(omega / big, min_v) / 2
    bounds = [par.d[i] * par.y[i][0] for i in act]
    bounds.append((delta - mu_pre) * a * min(fee_cap.values()) / (m * (1 - delta)))
    e = min(bounds) / 2
    y, q = {}, {}
    for i in act:
        d = par.d[i]
        ladder = (e / d,) + par.y[i]
        ladder = ladder + (ladder[-1] / (1 - d),)
        y[i] = ladder
        y0 = ladder[0]
        qs = [None] * len(ladder)
        for r in range(1, len(ladder) - 1):
            qs[r] = y0 / ladder[r] - y0 / ladder[r + 1]
        qs[-1] = y0 / ladder[-1]
        qs[0] = 1 - y0 / ladder[1]
        q[i] = tuple(qs)
    mu = min(omega / big, min_v, min(y[i][0] for i in act)) / 2
    delta_j = {j: (1 - delta) * e / (a * fee_cap[j]) for j in range(m)}

    u_max = max(u_bar.values())
    xi = min(mu / u_max, mu / (4 * n * n * m),
             omega / (2 * n * m * u_max + mu * (n + n * m + n * n * m))) / 2

    names = [("rho", i) for i in act] + [("single", i) for i in act]
    for j in range(m):
        for i in s.active_sets[j]:
            for k in s.active_sets[j]:
                if i != k:
                    names += [("pair", i, j, k), ("pair'", i, j, k)]
    names += [("filler", i) for i in range(n)]
    K = len(names)
    tiny = {name: (r + 1) * mu / (2 * K) for r, name in enumerate(names)}
    rho = {i: tiny[("rho", i)] for i in act}
    eta = {name: x for name, x in tiny.items() if name[0] in ("single", "pair", "pair'")}
    filler_values = tuple(tiny[("filler", i)] for i in range(n))

    n_xi = 2 * s.size + a + 2 * sum(len(A) * (len(A) - 1) for A in s.active_sets)
    merged = sum(1 for j, i in s.pairs if u_prime[(i, j)] == u_bar[(i, j)])
    filler_mass = 1 - (1 - delta) - sum(delta_j.values()) - (n_xi - merged) * xi

    return EmbeddingConstants(delta, omega, mu, eps_dev, eps, e, y, q, fee_cap, delta_j,
                              xi, rho, eta, u_bar, u_prime, filler_values, filler_mass)


def build_distribution(s: MDivisibleSet, omega=OMEGA) -> Embedding:
    c = resolve_constants(s, omega)
    par = parameters(s)
    n, a = s.n, par.a
    w = (1 - c.delta) / a
    support, tags = {}, {}

    def add(v, p, tag):
        v = tuple(v)
        if v in support:
            raise AssertionError(f"instance collision {tags[v]} vs {tag}")
        support[v] = p
        tags[v] = tag

    for i in s.active_players:
        for r, yr in enumerate(c.y[i]):
            v = [c.rho[i]] * n
            v[i] = yr
            add(v, c.q[i][r] * w, ("P", i, r))
        for r in range(1, len(c.y[i]) - 1):
            assert c.e <= c.y[i][r] * c.q[i][r]
    for j, vj in enumerate(s.base_vectors):
        add(vj, c.delta_j[j], ("E", j))
    for j, i in s.pairs:
        for kind, x in (("u'", c.u_prime[(i, j)]), ("u", c.u_bar[(i, j)])):
            v = list(s.base_vectors[j])
            v[i] = x
            if tuple(v) in support:   # u' == u: one point, one xi
                continue
            add(v, c.xi, ("O", i, j, kind))
    for i in s.active_players:
        v = [c.rho[i]] * n
        v[i] = c.eta[("single", i)]
        add(v, c.xi, ("R", "single", i))
    for j in range(s.m):
        for i in s.active_sets[j]:
            for k in s.active_sets[j]:
                if i == k:
                    continue
                for kind, key, xk in (("u'", "pair", c.u_prime[(k, j)]),
                                      ("u", "pair'", c.u_bar[(k, j)])):
                    v = list(s.base_vectors[j])
                    v[i] = c.eta[(key, i, j, k)]
                    v[k] = xk
                    add(v, c.xi, ("R", "pair", i, j, k, kind))
    add(c.filler_values, c.filler_mass, ("FILLER",))

    d = JointDistribution(n, tuple(support.items()))
    verdict = validate_distribution(d)
    assert verdict.ok, verdict.violations
    return Embedding(s, par, c, d, tags)


def _fee(emb, i, j, amount):
    """Per-column fee that yields expected fee revenue amount*(1-delta)/a."""
    c = emb.constants
    return (1 - c.delta) / emb.params.a * amount / c.delta_j[j]


def reference_mechanism(emb: Embedding):
    """Agree with S everywhere: win just above v_ij at the base columns, win for
    free at the P column, and charge a flat fee at every base column."""
    s, c = emb.set, emb.constants
    th, fees = {}, {}
    for i in s.active_players:
        th[(i, emb.p_column(i))] = Fraction(0)
    for j, i in s.pairs:
        col = emb.base_column(i, j)
        th[(i, col)] = s.v(i, j) + c.eps
        fees[(i, col)] = _fee(emb, i, j, c.e)
    return ThresholdMechanism(s.n, th), FeeSchedule(fees)


def f_star(emb: Embedding, i, j, t=None) -> Fraction:
    """min{(y_{i,sigma(j)} - t)^+ q_{i,sigma(j)}, e}, with t defaulting to y_i0."""
    c, par = emb.constants, emb.params
    r = par.sigma[(i, j)]
    t = c.y[i][0] if t is None else t
    if t == INF:
        return Fraction(0)
    return min(max(c.y[i][r] - t, 0) * c.q[i][r], c.e)


def reference_mechanism_almost_linear(emb: Embedding):
    """Post y_i0 on each ladder, sell every base vector to its highest bidder at
    his value, keep the others just above v_ij, and scale fees by F*_ij."""
    s, c = emb.set, emb.constants
    th, fees = {}, {}
    for i in s.active_players:
        th[(i, emb.p_column(i))] = c.y[i][0]
    for j, vj in enumerate(s.base_vectors):
        top = max(range(s.n), key=lambda p: (vj[p], -p))
        th[(top, drop(vj, top))] = vj[top]
        for i in s.active_sets[j]:
            col = emb.base_column(i, j)
            if i != top:
                th[(i, col)] = vj[i] + c.eps
            fees[(i, col)] = _fee(emb, i, j, f_star(emb, i, j))
    return ThresholdMechanism(s.n, th), FeeSchedule(fees)


def reference_revenue_bound(emb: Embedding) -> Fraction:
    """|S| e (1-delta)/a."""
    return emb.set.size * emb.constants.e * (1 - emb.constants.delta) / emb.params.a


def almost_linear_revenue_bound(emb: Embedding) -> Fraction:
    s, c = emb.set, emb.constants
    w = (1 - c.delta) / emb.params.a
    tot = sum((c.y[i][0] * w for i in s.active_players), Fraction(0))
    tot += sum((c.delta_j[j] * max(s.base_vectors[j]) for j in range(s.m)), Fraction(0))
    tot += sum((f_star(emb, i, j) * w for j, i in s.pairs), Fraction(0))
    return tot
