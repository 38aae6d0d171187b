"""Exact oracles: LP-optimal fees, brute-force optimal mechanisms, the tighter
upper-bound formula, rigidity reports, corruption curves, allocation strings
and the counting predicate."""
from __future__ import annotations

import itertools
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import INF, JointDistribution, drop, expected_welfare
from .lp import LPProblem, LPResult, left_null_space, lp_max, simplex_std, solve_exact
from .mech import (FeeSchedule, ThresholdMechanism, agreement_ratio, check_feasible,
                   expost_revenue, interim_revenue, is_highest, winners)

ZERO = Fraction(0)
DEFAULT_CAP = 2 * 10 ** 6


# ------------------------------------------------------------------ fee LPs

class PlayerModel:
    """Everything about player i that does not depend on the mechanism.

    The fee LP  max sum_col Pr(col) c_col  s.t.  sum_col Pr(w, col) c_col <= Pr(w) pi(w)
    has objective equal to the sum of its constraint rows, so with y = A c it
    reads  max 1.y  s.t. y <= b, y in range(A).  Writing y = b - s and Z for a
    basis of the left null space of A:

        fees = sum(b) - min{ 1.s : Z^T s = Z^T b, s >= 0 }.

    Z is fixed per (distribution, player); only b moves with the thresholds.
    """

    def __init__(self, d: JointDistribution, i: int):
        self.i = i
        self.rows = d.values_of(i)
        self.row_ix = {w: k for k, w in enumerate(self.rows)}
        self.cols = d.profiles_of(i)
        self.col_ix = {c: k for k, c in enumerate(self.cols)}
        self.cells = defaultdict(list)          # col -> [(row index, Pr(w, col))]
        for (w, prof), p in d.joint_table(i).items():
            self.cells[prof].append((self.row_ix[w], p))
        for col in self.cells:
            self.cells[col].sort()
        self.pr_col = {c: d.pr_profile(i, c) for c in self.cols}
        self.pr_row = [d.pr_value(i, w) for w in self.rows]
        self._Z = None

    @property
    def A(self):
        A = [[ZERO] * len(self.cols) for _ in self.rows]
        for col, lst in self.cells.items():
            k = self.col_ix[col]
            for r, p in lst:
                A[r][k] = p
        return A

    @property
    def Z(self):
        """Left-null basis restricted to its support rows: (support, vectors)."""
        if self._Z is None:
            # only rows with no private column can carry a null combination
            shared = set()
            for lst in self.cells.values():
                if len(lst) > 1:
                    shared.update(r for r, _ in lst)
            private = {r for lst in self.cells.values() if len(lst) == 1 for r, _ in lst}
            cand = sorted(shared - private)
            if not cand:
                self._Z = ((), ())
            else:
                cset = set(cand)
                cols = [c for c, lst in self.cells.items() if any(r in cset for r, _ in lst)]
                pos = {r: k for k, r in enumerate(cand)}
                M = [[ZERO] * len(cols) for _ in cand]
                for k, c in enumerate(cols):
                    for r, p in self.cells[c]:
                        if r in cset:
                            M[pos[r]][k] = p
                basis = left_null_space(M)
                support = sorted({cand[k] for z in basis for k, x in enumerate(z) if x})
                spos = {r: k for k, r in enumerate(support)}
                vecs = tuple(tuple(z[pos[r]] for r in support) for z in basis)
                self._Z = (tuple(support), vecs)
        return self._Z

    def b_vector(self, t_of):
        """b_w = Pr(w) pi(w) and the ex-post revenue, for thresholds t_of(col)."""
        b = [ZERO] * len(self.rows)
        rev = ZERO
        for col, lst in self.cells.items():
            t = t_of(col)
            if t == INF:
                continue
            for r, p in lst:
                w = self.rows[r]
                if w >= t:
                    b[r] += p * (w - t)
                    rev += p * t
        return b, rev

    def slack(self, b):
        """min 1.s s.t. Z^T s = Z^T b, s >= 0  ->  (value, s on support rows)."""
        support, vecs = self.Z
        if not vecs:
            return ZERO, {}
        A = [list(z) for z in vecs]
        rhs = [sum((z[k] * b[r] for k, r in enumerate(support)), ZERO) for z in vecs]
        res = simplex_std([-1] * len(support), A, rhs)
        if not res.ok:
            raise AssertionError("fee LP slack problem infeasible; b must be in range")
        return -res.value, dict(zip(support, res.x))

    def fee_total(self, b) -> Fraction:
        val, _ = self.slack(b)
        return sum(b, ZERO) - val

    def fee_schedule(self, b) -> dict:
        """An optimal fee vector {col: c}."""
        _, s = self.slack(b)
        y = [b[r] - s.get(r, ZERO) for r in range(len(self.rows))]
        c = solve_exact(self.A, y)
        assert c is not None
        return {col: c[k] for col, k in self.col_ix.items() if c[k]}


def optimal_fees(mech: ThresholdMechanism, d: JointDistribution, models=None):
    """LP-optimal fees for a feasible threshold mechanism -> (FeeSchedule, total)."""
    fees, total = {}, ZERO
    for i in range(d.n):
        pm = models[i] if models else PlayerModel(d, i)
        b, _ = pm.b_vector(lambda col: mech.t(i, col))
        for col, c in pm.fee_schedule(b).items():
            fees[(i, col)] = c
        total += pm.fee_total(b)
    return FeeSchedule(fees), total


def fee_lp(mech: ThresholdMechanism, d: JointDistribution, i: int) -> LPProblem:
    """The fee LP of player i written out in full (for cross-checks)."""
    pm = PlayerModel(d, i)
    b, _ = pm.b_vector(lambda col: mech.t(i, col))
    return LPProblem(tuple(pm.pr_col[c] for c in pm.cols), tuple(map(tuple, pm.A)), tuple(b))


def mech_interim_value(mech, d, models=None) -> Fraction:
    """ex-post revenue + LP-optimal fee revenue."""
    tot = ZERO
    for i in range(d.n):
        pm = models[i] if models else PlayerModel(d, i)
        b, rev = pm.b_vector(lambda col: mech.t(i, col))
        tot += rev + pm.fee_total(b)
    return tot


# ------------------------------------------------------- exhaustive search
#
# With LP-optimal fees, player i's interim revenue is
#     R_i = sum over won rows (w, col) of Pr(w, col) * w  -  slack_i(b on Z rows)
# (profit is extracted in full except on rows carrying a left-null combination).
# Only the "coupled" cells touching those rows need their thresholds enumerated
# jointly; every other cell contributes through its winning row set alone.  The
# search below enumerates coupled-cell choices per player and solves the rest
# as a max-weight exclusive-winner problem by branch and bound.

class SearchCapExceeded(RuntimeError):
    pass


@dataclass
class Cell:
    i: int
    col: tuple
    rows: list            # [(w, instance index, Pr)] ascending in w
    coupled: bool = False

    def candidates(self):
        """thresholds rows[k].w for k = 0..r-1, then INF (win nothing)."""
        return [w for w, _, _ in self.rows] + [INF]

    def winset(self, t):
        return [ix for w, ix, _ in self.rows if w >= t]

    def welfare(self, t):
        return sum((p * w for w, _, p in self.rows if w >= t), ZERO)

    def payments(self, t):
        return sum((p * t for w, _, p in self.rows if w >= t), ZERO)


class Objective:
    """Adds -penalty(i, col, t, coupled thresholds of i) to the revenue."""
    name = "revenue"

    def penalty(self, i, col, t, kthr) -> Fraction:
        return ZERO

    def forced_coupled(self, i):
        return ()


class Engine:
    def __init__(self, d: JointDistribution, models=None, allowed=None):
        self.d = d
        self.inst = [v for v, _ in d]
        self.index = {v: k for k, v in enumerate(self.inst)}
        self.models = models or [PlayerModel(d, i) for i in range(d.n)]
        self.allowed = allowed        # optional (i, col, t) -> bool
        self.cells = {}
        for i, pm in enumerate(self.models):
            for col, lst in pm.cells.items():
                rows = []
                for r, p in lst:
                    w = pm.rows[r]
                    v = tuple(col[:i]) + (w,) + tuple(col[i:])
                    rows.append((w, self.index[v], p))
                self.cells[(i, col)] = Cell(i, col, rows)

    def coupled_cells(self, i, objective):
        pm = self.models[i]
        support = set(pm.Z[0])
        out = [col for col, lst in pm.cells.items() if any(r in support for r, _ in lst)]
        for col in objective.forced_coupled(i):
            if col in pm.cells and col not in out:
                out.append(col)
        return sorted(out)

    def options(self, cell):
        out = []
        for t in cell.candidates():
            if self.allowed is None or self.allowed(cell.i, cell.col, t):
                out.append(t)
        return out

    def _coupled_options(self, i, objective):
        """[(value, thresholds dict, won instance set)] for player i's coupled cells."""
        pm = self.models[i]
        cols = self.coupled_cells(i, objective)
        choices = [self.options(self.cells[(i, c)]) for c in cols]
        out = []
        for combo in itertools.product(*choices):
            kthr = dict(zip(cols, combo))
            won = set()
            val = ZERO
            for col, t in kthr.items():
                cell = self.cells[(i, col)]
                won.update(cell.winset(t))
                val += cell.welfare(t) - objective.penalty(i, col, t, kthr)
            b, _ = pm.b_vector(lambda col: kthr.get(col, INF))
            sv, _ = pm.slack(b)
            out.append((val - sv, kthr, frozenset(won)))
        out.sort(key=lambda o: -o[0])
        return out

    def solve(self, objective=None, node_cap=DEFAULT_CAP):
        """Exact max of sum_i R_i - penalties over feasible mechanisms.
        Returns (value, ThresholdMechanism)."""
        objective = objective or Objective()
        n = self.d.n
        kopts = [self._coupled_options(i, objective) for i in range(n)]
        kcols = [set(self.coupled_cells(i, objective)) for i in range(n)]
        free = [c for key, c in self.cells.items() if key[1] not in kcols[key[0]]]
        best = [None, None]
        counter = [0]

        def rec(i, chosen, claimed, acc):
            if i == n:
                kthr_all = [c[1] for c in chosen]
                val, assign = self._solve_free(free, claimed, kthr_all, objective,
                                               counter, node_cap)
                if val is None:
                    return
                tot = acc + val
                if best[0] is None or tot > best[0]:
                    best[0] = tot
                    best[1] = (kthr_all, assign)
                return
            for opt in kopts[i]:
                if opt[2] & claimed:
                    continue
                rec(i + 1, chosen + [opt], claimed | opt[2], acc + opt[0])

        rec(0, [], frozenset(), ZERO)
        kthr_all, assign = best[1]
        th = {}
        for i in range(n):
            for col, t in kthr_all[i].items():
                if t != INF:
                    th[(i, col)] = t
        for (i, col), t in assign.items():
            if t != INF:
                th[(i, col)] = t
        return best[0], ThresholdMechanism(n, th)

    def _solve_free(self, free, claimed, kthr_all, objective, counter, node_cap):
        """Max-weight exclusive-winner assignment over the free cells."""
        items = []
        for cell in free:
            kthr = kthr_all[cell.i]
            opts = []
            for t in self.options(cell):
                ws = frozenset(cell.winset(t))
                if ws & claimed:
                    continue
                opts.append((cell.welfare(t) - objective.penalty(cell.i, cell.col, t, kthr), t, ws))
            if not opts:
                return None, None
            opts.sort(key=lambda o: (-o[0], o[1] == INF))
            items.append((cell, opts))
        # components: cells linked by an instance more than one of them can win
        parent = list(range(len(items)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        owner = {}
        for k, (cell, opts) in enumerate(items):
            reach = set().union(*(o[2] for o in opts))
            for ix in reach:
                if ix in owner:
                    parent[find(k)] = find(owner[ix])
                else:
                    owner[ix] = k
        comps = defaultdict(list)
        for k in range(len(items)):
            comps[find(k)].append(k)
        total = ZERO
        assign = {}
        for members in comps.values():
            val, pick = _branch_and_bound([items[k] for k in members], counter, node_cap)
            total += val
            for k, t in zip(members, pick):
                assign[(items[k][0].i, items[k][0].col)] = t
        return total, assign


def _branch_and_bound(items, counter, node_cap):
    """items: [(cell, [(value, t, winset)])] with value = welfare - penalty.
    Bound: per unclaimed instance, the best welfare a remaining cell could still
    collect there, minus the smallest penalty each remaining cell must pay."""
    if len(items) == 1:
        return items[0][1][0][0], [items[0][1][0][1]]
    # breadth-first order over the conflict graph keeps conflicts local
    inst_cells = defaultdict(list)
    for k, (cell, opts) in enumerate(items):
        for w, ix, p in cell.rows:
            inst_cells[ix].append(k)
    order, seen = [], set()
    for k0 in sorted(range(len(items)), key=lambda k: -items[k][1][0][0]):
        if k0 in seen:
            continue
        queue = [k0]
        seen.add(k0)
        while queue:
            k = queue.pop(0)
            order.append(k)
            for w, ix, p in items[k][0].rows:
                for k2 in inst_cells[ix]:
                    if k2 not in seen:
                        seen.add(k2)
                        queue.append(k2)
    pos = {k: r for r, k in enumerate(order)}
    opts = [items[k][1] for k in order]
    gain = {}                         # (position, instance) -> Pr * w
    reach = defaultdict(list)         # instance -> [(position, Pr * w)]
    minpen = []
    for r, k in enumerate(order):
        cell = items[k][0]
        best_ws = set().union(*(o[2] for o in opts[r]))
        for w, ix, p in cell.rows:
            if ix in best_ws:
                reach[ix].append((r, p * w))
        pens = [cell.welfare(t) - val for val, t, _ in opts[r]]
        minpen.append(min(pens))
    minpen_suffix = [ZERO] * (len(opts) + 1)
    for r in range(len(opts) - 1, -1, -1):
        minpen_suffix[r] = minpen_suffix[r + 1] + minpen[r]
    best = [None, None]
    pick = [None] * len(opts)
    used = set()

    def bound(r):
        tot = ZERO
        for ix, lst in reach.items():
            if ix in used:
                continue
            m = None
            for r2, g in lst:
                if r2 >= r and (m is None or g > m):
                    m = g
            if m is not None:
                tot += m
        return tot - minpen_suffix[r]

    def rec(r, acc):
        counter[0] += 1
        if counter[0] > node_cap:
            raise SearchCapExceeded(f"enumeration cap exceeded (size {counter[0]})")
        if r == len(opts):
            if best[0] is None or acc > best[0]:
                best[0], best[1] = acc, list(pick)
            return
        if best[0] is not None and acc + bound(r) <= best[0]:
            return
        for val, t, ws in opts[r]:
            if ws & used:
                continue
            used.update(ws)
            pick[r] = t
            rec(r + 1, acc + val)
            used.difference_update(ws)

    rec(0, ZERO)
    return best[0], [best[1][pos[k]] for k in range(len(items))]


# --------------------------------------------------------- ex-post / interim

def _topk_allowed(d, k):
    """(i, col, t) -> bool: i may only win at instances where he is among the
    k highest bidders (ties broken toward the lowest index)."""
    if k is None:
        return None

    def rank(v, i):
        return sum(1 for p in range(len(v)) if v[p] > v[i] or (v[p] == v[i] and p < i))

    def ok(i, col, t):
        if t == INF:
            return True
        for w in d.values_of(i):
            if w >= t:
                v = tuple(col[:i]) + (w,) + tuple(col[i:])
                if d.prob.get(v) and rank(v, i) >= k:
                    return False
        return True
    return ok


def brute_force_expost_opt(d: JointDistribution, topk=None, cap=DEFAULT_CAP):
    """Optimal ex-post IR threshold mechanism over candidate thresholds -> (mech, revenue)."""
    eng = Engine(d, allowed=_topk_allowed(d, topk))
    items = []
    for cell in eng.cells.values():
        opts = [(cell.payments(t), t, frozenset(cell.winset(t))) for t in eng.options(cell)]
        opts.sort(key=lambda o: (-o[0], o[1] == INF))
        items.append((cell, opts))
    counter = [0]
    val, assign = _solve_items(items, counter, cap)
    th = {(c.i, c.col): t for (c, _), t in zip(items, assign) if t != INF}
    return ThresholdMechanism(d.n, th), val


def _solve_items(items, counter, cap):
    parent = list(range(len(items)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner = {}
    for k, (cell, opts) in enumerate(items):
        for ix in set().union(*(o[2] for o in opts)):
            if ix in owner:
                parent[find(k)] = find(owner[ix])
            else:
                owner[ix] = k
    comps = defaultdict(list)
    for k in range(len(items)):
        comps[find(k)].append(k)
    total, out = ZERO, [None] * len(items)
    for members in comps.values():
        val, pick = _branch_and_bound([items[k] for k in members], counter, cap)
        total += val
        for k, t in zip(members, pick):
            out[k] = t
    return total, out


@dataclass
class InterimOpt:
    mechanism: ThresholdMechanism
    fees: FeeSchedule
    revenue: Fraction
    mode: str                  # "full" | "sampled"
    evaluated: int = 0


def brute_force_interim_opt(d: JointDistribution, cap=DEFAULT_CAP, samples=2000, seed=0):
    """Optimal (threshold mechanism, LP fees) pair.  Exact search first; if the
    node cap trips, falls back to sampling and says so in ``mode``."""
    eng = Engine(d)
    try:
        val, mech = eng.solve(node_cap=cap)
        fees, _ = optimal_fees(mech, d, eng.models)
        return InterimOpt(mech, fees, val, "full")
    except SearchCapExceeded:
        pass
    sampler = MechanismSampler(eng, seed)
    best, best_mech = None, None
    for _ in range(samples):
        mech = sampler.draw()
        val = mech_interim_value(mech, d, eng.models)
        if best is None or val > best:
            best, best_mech = val, mech
    fees, _ = optimal_fees(best_mech, d, eng.models)
    return InterimOpt(best_mech, fees, best, "sampled", samples)


class MechanismSampler:
    """Uniform candidate threshold per cell, then feasibility repair: at every
    over-allocated instance one winner (chosen at random) keeps it and the
    others move their threshold just above it."""

    def __init__(self, eng: Engine, seed):
        self.eng = eng
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.keys = sorted(eng.cells)
        self.by_inst = defaultdict(list)
        for key, cell in eng.cells.items():
            for w, ix, _ in cell.rows:
                self.by_inst[ix].append((key, w))

    def draw(self, fixed=None) -> ThresholdMechanism:
        th = {}
        for key in self.keys:
            if fixed and key in fixed:
                th[key] = fixed[key]
                continue
            opts = self.eng.options(self.eng.cells[key])
            th[key] = opts[int(self.rng.integers(0, len(opts)))]
        self.repair(th)
        return ThresholdMechanism(self.eng.d.n, {k: t for k, t in th.items() if t != INF})

    def repair(self, th):
        for ix in range(len(self.eng.inst)):
            win = [(key, w) for key, w in self.by_inst[ix] if w >= th[key]]
            if len(win) < 2:
                continue
            keep = int(self.rng.integers(0, len(win)))
            for r, (key, w) in enumerate(win):
                if r != keep:
                    th[key] = _next_above(self.eng.cells[key], w)


def _next_above(cell, w):
    for x, _, _ in cell.rows:
        if x > w:
            return x
    return INF


# ------------------------------------------------------------ upper bound

@dataclass(frozen=True)
class BoundDiagnostics:
    t_base: dict          # (i, j) -> threshold at (v_j)_-i
    I: dict               # (i, j) -> 1 if t_ij < v_ij
    t_p: dict             # i -> threshold at i's ladder column
    F: dict               # (i, j) -> F_ij
    chi: dict             # (i, j) -> 1 if the mechanism agrees with S at (i, j)
    p_terms: dict         # i -> ladder term
    e_term: Fraction
    value: Fraction


def p_term(emb, i, t) -> Fraction:
    """t * Pr(ladder value >= t) on i's equal-revenue block; 0 when t = INF."""
    if t == INF:
        return ZERO
    c = emb.constants
    w = (1 - c.delta) / emb.params.a
    return t * sum((q * w for y, q in zip(c.y[i], c.q[i]) if y >= t), ZERO)


def f_term(emb, i, j, t) -> Fraction:
    """F_ij = min{(y_{i,sigma(j)} - t)^+ q_{i,sigma(j)}, e}; 0 when t = INF."""
    if t == INF:
        return ZERO
    c = emb.constants
    r = emb.params.sigma[(i, j)]
    return min(max(c.y[i][r] - t, ZERO) * c.q[i][r], c.e)


def upper_bound_formula(mech: ThresholdMechanism, emb):
    s, c = emb.set, emb.constants
    w = (1 - c.delta) / emb.params.a
    t_p = {i: mech.t(i, emb.p_column(i)) for i in s.active_players}
    p_terms = {i: p_term(emb, i, t_p[i]) for i in s.active_players}
    e_term = sum((c.delta_j[j] * max(s.base_vectors[j]) for j in range(s.m)), ZERO)
    _, chi = agreement_ratio(mech, s)
    t_base, I, F = {}, {}, {}
    val = sum(p_terms.values(), ZERO) + e_term
    for j, i in s.pairs:
        t_base[(i, j)] = mech.t(i, emb.base_column(i, j))
        I[(i, j)] = int(t_base[(i, j)] < s.v(i, j))
        F[(i, j)] = f_term(emb, i, j, t_p[i])
        val += F[(i, j)] * w * chi[(i, j)]
    return val, BoundDiagnostics(t_base, I, t_p, F, chi, p_terms, e_term, val)


class _AgreementPenalty(Objective):
    """lam per agreement with S: max of R - lam * sum(chi)."""
    name = "ratio"

    def __init__(self, emb, lam):
        self.lam = lam
        self.base = {(i, emb.base_column(i, j)): emb.set.u(i, j) for j, i in emb.set.pairs}

    def penalty(self, i, col, t, kthr):
        u = self.base.get((i, col))
        return self.lam if u is not None and t <= u else ZERO


class _FormulaPenalty(Objective):
    """max of R - (upper_bound_formula - constant E term)."""
    name = "formula"

    def __init__(self, emb):
        self.emb = emb
        self.pcol = {i: emb.p_column(i) for i in emb.set.active_players}
        self.base = {(i, emb.base_column(i, j)): j for j, i in emb.set.pairs}
        self.w = (1 - emb.constants.delta) / emb.params.a

    def forced_coupled(self, i):
        return (self.pcol[i],) if i in self.pcol else ()

    def penalty(self, i, col, t, kthr):
        if i in self.pcol and col == self.pcol[i]:
            return p_term(self.emb, i, t)
        j = self.base.get((i, col))
        if j is None or t > self.emb.set.u(i, j):
            return ZERO
        return f_term(self.emb, i, j, kthr.get(self.pcol[i], INF)) * self.w


# ------------------------------------------------------------ rigidity

@dataclass
class MechanismRow:
    name: str
    x: Fraction
    revenue: Fraction
    ref_revenue: Fraction
    c_S: Fraction
    bound: Fraction           # min{c_S + x, 1}
    formula: Fraction
    slack: Fraction

    @property
    def ratio_excess(self) -> Fraction:
        """revenue - bound * REV_ref  (positive = beyond the bound at zero slack)."""
        return self.revenue - self.bound * self.ref_revenue

    @property
    def formula_excess(self) -> Fraction:
        return self.revenue - self.formula

    @property
    def ratio_ok(self) -> bool:
        return self.revenue <= (self.bound + self.slack) * self.ref_revenue

    @property
    def formula_ok(self) -> bool:
        return self.revenue <= self.formula + self.slack

    def verdict(self, excess, ok):
        if excess <= 0:
            return "PASS"
        return "WITHIN_TOLERANCE" if ok else "FAIL"

    def to_dict(self):
        from .core import fmt_value
        return {"name": self.name, "x": fmt_value(self.x), "revenue": fmt_value(self.revenue),
                "ref_revenue": fmt_value(self.ref_revenue), "c_S": fmt_value(self.c_S),
                "bound": fmt_value(self.bound), "formula": fmt_value(self.formula),
                "slack": fmt_value(self.slack),
                "ratio_verdict": self.verdict(self.ratio_excess, self.ratio_ok),
                "formula_verdict": self.verdict(self.formula_excess, self.formula_ok),
                "revenue_ratio": float(self.revenue / self.ref_revenue)}


@dataclass
class RigidityReport:
    mode: str                       # "full" | "sampled"
    slack: Fraction
    c_S: Fraction
    ref_revenue: Fraction
    rows: list                      # MechanismRow for named mechanisms and witnesses
    maxima: dict                    # check -> exact max of its left side minus right side
    evaluated: int
    runtime: float
    witnesses: dict = field(default_factory=dict)   # row name -> ThresholdMechanism

    @property
    def max_ratio(self) -> Fraction:
        return max(r.revenue / r.ref_revenue for r in self.rows)

    @property
    def ok(self) -> bool:
        return all(r.ratio_ok and r.formula_ok for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not (r.ratio_ok and r.formula_ok)]

    def to_dict(self):
        from .core import fmt_value
        return {"mode": self.mode, "slack": fmt_value(self.slack), "c_S": fmt_value(self.c_S),
                "ref_revenue": fmt_value(self.ref_revenue),
                "max_ratio": fmt_value(self.max_ratio), "ok": self.ok,
                "evaluated": self.evaluated, "runtime_s": round(self.runtime, 3),
                "maxima": {k: fmt_value(v) for k, v in self.maxima.items()},
                "rows": [r.to_dict() for r in self.rows],
                "witnesses": {name: [[i, [fmt_value(x) for x in col], fmt_value(t)]
                                     for (i, col), t in sorted(m.thresholds.items())]
                              for name, m in self.witnesses.items()}}


def reference_revenue(emb) -> Fraction:
    """REV_ref: interim revenue of the almost-linear reference mechanism."""
    from .embed import reference_mechanism_almost_linear
    mech, fees = reference_mechanism_almost_linear(emb)
    return interim_revenue(mech, fees, emb.distribution)


def evaluate_row(name, mech, emb, ref_revenue, slack, models=None, revenue=None) -> MechanismRow:
    d = emb.distribution
    if revenue is None:
        revenue = mech_interim_value(mech, d, models)
    x, _ = agreement_ratio(mech, emb.set)
    c_S = emb.params.c_S
    formula, _ = upper_bound_formula(mech, emb)
    return MechanismRow(name, x, revenue, ref_revenue, c_S, min(c_S + x, Fraction(1)),
                        formula, Fraction(slack))


def named_mechanisms(emb, seed=0, fractions=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1)):
    """The reference mechanisms, the all-INF mechanism, and corrupted references
    (both reference shapes with a random part of S's base thresholds at INF)."""
    from .embed import reference_mechanism, reference_mechanism_almost_linear
    s = emb.set
    ref, _ = reference_mechanism(emb)
    al, _ = reference_mechanism_almost_linear(emb)
    out = [("reference", ref), ("reference_almost_linear", al),
           ("all_inf", ThresholdMechanism(s.n, {}))]
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(s.size)
    for base_name, base in (("reference", ref), ("reference_almost_linear", al)):
        for f in fractions:
            f = Fraction(f)
            kill = _corrupt_subset(s, f, perm)
            mech = base.replace({(i, emb.base_column(i, j)): INF for j, i in kill})
            out.append((f"{base_name}/corrupt={f}", mech))
    return out


def _corrupt_subset(s, f, perm):
    """The first ceil(f|S|) pairs of a fixed random order, so larger fractions
    corrupt supersets of smaller ones."""
    count = math.ceil(f * s.size)
    return [s.pairs[k] for k in sorted(perm[:count])]


def rigidity_check(emb, mode="full", count=10000, seed=0, slack=None, cap=DEFAULT_CAP):
    """Both bound checks over every evaluated mechanism.

    full:     exact maxima of  R - x*REV_ref,  R  and  R - formula  over all
              threshold mechanisms on candidate thresholds (LP-optimal fees);
              the three argmax mechanisms are stored as witness rows.  On cells
              whose rows carry a left-null combination the exact threshold
              value moves the fee LP, so off-grid mechanisms can do better than
              the grid maximum -- hence the named rows below.
    sampled:  ``count`` random feasible mechanisms.
    Named mechanisms (references, all-INF, corrupted references) are always
    evaluated.  If the full search trips its node cap the report falls back to
    sampled mode and is labelled as such."""
    start = time.time()
    d = emb.distribution
    slack = emb.constants.omega if slack is None else Fraction(slack)
    ref = reference_revenue(emb)
    eng = Engine(d)
    rows, witnesses, maxima = [], {}, {}
    evaluated = 0
    for name, mech in named_mechanisms(emb, seed):
        if not check_feasible(mech, d):
            continue
        rows.append(evaluate_row(name, mech, emb, ref, slack, eng.models))
        witnesses[name] = mech
        evaluated += 1
    s = emb.set
    c_S = emb.params.c_S
    if mode == "full":
        try:
            lam = ref / s.size
            e_term = sum((emb.constants.delta_j[j] * max(s.base_vectors[j]) for j in range(s.m)),
                         ZERO)
            checks = (("ratio", _AgreementPenalty(emb, lam), lambda v: v - c_S * ref),
                      ("revenue", Objective(), lambda v: v - ref),
                      ("formula", _FormulaPenalty(emb), lambda v: v - e_term))
            for name, obj, shift in checks:
                val, mech = eng.solve(obj, node_cap=cap)
                maxima[name] = shift(val)
                row = evaluate_row(f"argmax_{name}", mech, emb, ref, slack, eng.models)
                rows.append(row)
                witnesses[row.name] = mech
        except SearchCapExceeded:
            mode = "sampled"
    if mode == "sampled":
        sampler = MechanismSampler(eng, seed)
        worst = {}
        for k in range(count):
            mech = sampler.draw()
            row = evaluate_row(f"sample_{k}", mech, emb, ref, slack, eng.models)
            evaluated += 1
            for key, ex in (("ratio", row.ratio_excess), ("formula", row.formula_excess),
                            ("revenue", row.revenue - ref)):
                if key not in worst or ex > worst[key][0]:
                    worst[key] = (ex, row, mech)
        labels = defaultdict(list)
        for key, (ex, row, mech) in worst.items():
            maxima[key] = ex
            labels[id(row)].append(key)
        for key, (ex, row, mech) in worst.items():
            if id(row) not in labels:
                continue
            row.name = "worst_" + "+".join(labels.pop(id(row))) + "_" + row.name
            rows.append(row)
            witnesses[row.name] = mech
    return RigidityReport(mode, slack, c_S, ref, rows, maxima, evaluated,
                          time.time() - start, witnesses)


def corruption_curve(emb, fractions, seed=0):
    """[(f, x, revenue / REV_ref, min{c_S + x, 1})] for the almost-linear
    reference mechanism (the one REV_ref is measured on) with a random
    ceil(f|S|) subset of its base thresholds moved to INF.  x is the realised
    agreement ratio, 1 - ceil(f|S|)/|S|."""
    from .embed import reference_mechanism_almost_linear
    s, d = emb.set, emb.distribution
    ref_mech, _ = reference_mechanism_almost_linear(emb)
    rev_ref = reference_revenue(emb)
    models = [PlayerModel(d, i) for i in range(d.n)]
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(s.size)
    out = []
    for f in fractions:
        f = Fraction(f)
        kill = _corrupt_subset(s, f, perm)
        mech = ref_mech.replace({(i, emb.base_column(i, j)): INF for j, i in kill})
        x, _ = agreement_ratio(mech, s)
        rev = mech_interim_value(mech, d, models)
        out.append((f, x, rev / rev_ref, min(emb.params.c_S + x, Fraction(1))))
    return out


# ------------------------------------------------------- allocation strings

def cm_key(v):
    """Sort key of the CM order: argmax index (ties to the lowest), then lex."""
    top = max(range(len(v)), key=lambda p: (v[p], -p))
    return (top, tuple(v))


def ordered_support(d: JointDistribution, order="cm"):
    inst = [v for v, _ in d]
    if order == "cm":
        return sorted(inst, key=cm_key)
    if order == "lex":
        return sorted(inst)
    raise ValueError(f"unknown order {order!r}")


def allocation_string(d: JointDistribution, alloc: dict, order="cm") -> str:
    """One character per instance: winner index counted from 1, 0 for no sale."""
    out = []
    for v in ordered_support(d, order):
        if v not in alloc:
            raise ValueError(f"allocation misses instance {v}")
        w = alloc[v]
        out.append("0" if w is None else str(w + 1))
    if d.n > 9:
        raise ValueError("single-character alphabet needs n <= 9")
    return "".join(out)


def parse_allocation_string(d: JointDistribution, text: str, order="cm") -> dict:
    inst = ordered_support(d, order)
    if len(text) != len(inst):
        raise ValueError("string length differs from support size")
    alloc = {}
    for v, ch in zip(inst, text):
        k = int(ch)
        if not 0 <= k <= d.n:
            raise ValueError(f"symbol {ch!r} out of range")
        alloc[v] = None if k == 0 else k - 1
    return alloc


def mechanism_allocation(mech: ThresholdMechanism, d: JointDistribution) -> dict:
    out = {}
    for v, _ in d:
        w = winners(mech, v)
        out[v] = w[0] if w else None
    return out


# ------------------------------------------------------------ counting

@dataclass(frozen=True)
class KCResult:
    holds: bool
    lhs: Fraction
    rhs: int


def kc_inequality(k, r, g, n, t, x) -> KCResult:
    """k / C(r, g) > n^t * C(g, floor(x g)) * n^floor(x g), exactly."""
    x = Fraction(x)
    for name, val in (("k", k), ("r", r), ("g", g), ("n", n), ("t", t)):
        if int(val) != val or val < 0:
            raise ValueError(f"{name} must be a nonnegative integer")
    if not 0 <= x <= 1:
        raise ValueError("need 0 <= x <= 1")
    if g > r:
        raise ValueError("need g <= r")
    xg = math.floor(x * g)
    lhs = Fraction(k, math.comb(r, g))
    rhs = n ** t * math.comb(g, xg) * n ** xg
    return KCResult(lhs > rhs, lhs, rhs)
