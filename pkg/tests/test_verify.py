import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from rigidity.core import INF, JointDistribution, expected_welfare, full_rank_check
from rigidity.embed import reference_mechanism, reference_mechanism_almost_linear
from rigidity.lp import lp_max
from rigidity.mech import (ThresholdMechanism, check_feasible, check_interim_ir, expost_revenue,
                           interim_revenue, lookahead)
from rigidity.verify import (Engine, allocation_string, brute_force_expost_opt,
                             brute_force_interim_opt, corruption_curve, fee_lp, kc_inequality,
                             mechanism_allocation, optimal_fees, parse_allocation_string,
                             upper_bound_formula)

from conftest import distributions


def all_mechanisms(d):
    """Oracle enumeration: every per-cell threshold from co-occurring values or INF."""
    cells = {}
    for i in range(d.n):
        for (vi, prof), _ in d.joint_table(i).items():
            cells.setdefault((i, prof), set()).add(vi)
    keys = sorted(cells)
    for combo in itertools.product(*[sorted(cells[k]) + [INF] for k in keys]):
        mech = ThresholdMechanism(d.n, {k: t for k, t in zip(keys, combo) if t != INF})
        if check_feasible(mech, d):
            yield mech


def naive_interim(mech, d):
    return expost_revenue(mech, d) + sum(lp_max(fee_lp(mech, d, i)).value for i in range(d.n))


small = distributions(n_players=(2, 3), max_support=3, grid=(1, 2, 3))


@settings(max_examples=25)
@given(small)
def test_optimal_fees_match_full_lp(d):
    for mech in itertools.islice(all_mechanisms(d), 6):
        fees, total = optimal_fees(mech, d)
        assert check_interim_ir(mech, fees, d)
        assert total == sum(lp_max(fee_lp(mech, d, i)).value for i in range(d.n))
        assert interim_revenue(mech, fees, d) == expost_revenue(mech, d) + total


@settings(max_examples=25)
@given(small)
def test_interim_search_matches_enumeration(d):
    best = max(naive_interim(m, d) for m in all_mechanisms(d))
    res = brute_force_interim_opt(d)
    assert res.mode == "full"
    assert res.revenue == best
    assert check_feasible(res.mechanism, d)
    assert interim_revenue(res.mechanism, res.fees, d) == best


@settings(max_examples=25)
@given(small)
def test_expost_search_matches_enumeration(d):
    best = max(expost_revenue(m, d) for m in all_mechanisms(d))
    mech, rev = brute_force_expost_opt(d)
    assert rev == best == expost_revenue(mech, d)


def test_expost_examples():
    d = JointDistribution.uniform([(5, 2, 3)])
    assert brute_force_expost_opt(d)[1] == 5
    # player 0 sold at 4 on (4,1), player 1 sold at 1 on (2,1)
    d = JointDistribution.uniform([(4, 1), (2, 1)])
    assert brute_force_expost_opt(d)[1] == F(5, 2)
    assert brute_force_expost_opt(d, topk=1)[1] == 2 == expost_revenue(lookahead(d), d)


@given(distributions(max_support=5))
def test_top1_is_lookahead(d):
    assert brute_force_expost_opt(d, topk=1)[1] == expost_revenue(lookahead(d), d)


@given(distributions(max_support=5))
def test_interim_dominates_expost(d):
    assert brute_force_interim_opt(d).revenue >= brute_force_expost_opt(d)[1]


@given(distributions(n_players=(2,), max_support=6, grid=(1, 2, 3, 4)))
def test_full_rank_interim_is_welfare(d):
    assume(full_rank_check(d).ok)
    assert brute_force_interim_opt(d).revenue == expected_welfare(d)


def test_single_instance_interim_is_welfare():
    d = JointDistribution.uniform([(2, 7, 3)])
    assert brute_force_interim_opt(d).revenue == 7


def test_embedding_search_beats_reference(kex4):
    d = kex4.distribution
    val, mech = Engine(d).solve()
    for build in (reference_mechanism, reference_mechanism_almost_linear):
        m, fees = build(kex4)
        assert val >= interim_revenue(m, fees, d)
    fees, _ = optimal_fees(mech, d)
    assert interim_revenue(mech, fees, d) == val


def test_formula_examples(kex4):
    s, c = kex4.set, kex4.constants
    e_term = sum(c.delta_j[j] * max(s.base_vectors[j]) for j in range(s.m))
    val, diag = upper_bound_formula(ThresholdMechanism(4, {}), kex4)
    assert val == e_term and set(diag.chi.values()) == {0}
    mech, _ = reference_mechanism(kex4)
    val, diag = upper_bound_formula(mech, kex4)
    assert val == e_term + s.size * c.e * (1 - c.delta) / kex4.params.a
    assert set(diag.t_p.values()) == {0} and set(diag.chi.values()) == {1}
    assert all(f <= c.e for f in diag.F.values())
    for j in range(s.m):
        assert sum(diag.I[(i, j)] for i in s.active_sets[j]) <= 1


def test_curve_endpoints(kex4):
    rows = corruption_curve(kex4, [0, 1], seed=3)
    (f0, x0, r0, b0), (f1, x1, r1, b1) = rows
    assert (x0, b0) == (1, 1) and r0 >= 1 - kex4.constants.omega
    assert x1 == 0
    assert r1 <= r0


def test_allocation_string_example():
    d = JointDistribution.uniform([(1, 2), (2, 1)])
    alloc = {(F(2), F(1)): 0, (F(1), F(2)): 1}
    assert allocation_string(d, alloc, "cm") == "12"
    assert allocation_string(d, alloc, "lex") == "21"
    assert allocation_string(d, {v: None for v, _ in d}) == "00"
    with pytest.raises(ValueError):
        allocation_string(d, {(F(2), F(1)): 0})


@given(distributions(), st.data(), st.sampled_from(["cm", "lex"]))
def test_allocation_string_roundtrip(d, data, order):
    alloc = {v: data.draw(st.sampled_from([None] + list(range(d.n)))) for v, _ in d}
    text = allocation_string(d, alloc, order)
    assert parse_allocation_string(d, text, order) == alloc
    assert allocation_string(d, parse_allocation_string(d, text, order), order) == text


def test_allocation_of_mechanism():
    d = JointDistribution.uniform([(3, 1), (1, 2)])
    assert allocation_string(d, mechanism_allocation(lookahead(d), d)) == "12"


def test_kc_examples():
    r = kc_inequality(1, 2, 1, 2, 1, 1)
    assert (r.lhs, r.rhs, r.holds) == (F(1, 2), 4, False)
    assert kc_inequality(20, 5, 2, 3, 0, 0).holds       # 20/10 > 1
    with pytest.raises(ValueError):
        kc_inequality(1, 2, 3, 2, 1, 0)
    with pytest.raises(ValueError):
        kc_inequality(1, 2, 1, 2, 1, F(3, 2))


@given(st.integers(0, 10 ** 6), st.integers(1, 12), st.data())
def test_kc_floor_convention(k, r, data):
    g = data.draw(st.integers(0, r))
    x = F(data.draw(st.integers(0, 7)), 7)
    res = kc_inequality(k, r, g, 3, 2, x)
    xg = (x * g).numerator // (x * g).denominator
    assert res.rhs == 9 * math.comb(g, xg) * 3 ** xg


def _singleton_set():
    from rigidity.divisible import MDivisibleSet
    return MDivisibleSet.make(3, 2, [[1, 3, 2], [F(1, 4), 5, 6]], [[0], [1]],
                              {(0, 0): 2, (1, 1): 7})


def test_rigidity_report_invariants(kex4):
    from rigidity.verify import rigidity_check
    rep = rigidity_check(kex4, "sampled", count=30, seed=1)
    assert rep.mode == "sampled" and rep.evaluated >= 30
    names = {r.name for r in rep.rows}
    assert {"reference", "reference_almost_linear", "all_inf"} <= names
    for r in rep.rows:
        # verdicts are functions of the stored exact values
        assert r.ratio_ok == (r.revenue <= (r.bound + r.slack) * r.ref_revenue)
        assert r.formula_ok == (r.revenue <= r.formula + r.slack)
        assert r.bound == min(r.c_S + r.x, 1)
    ref = next(r for r in rep.rows if r.name == "reference_almost_linear")
    assert ref.x == 1 and ref.revenue >= ref.ref_revenue
    inf = next(r for r in rep.rows if r.name == "all_inf")
    assert inf.revenue == 0 and inf.ratio_ok and inf.formula_ok


def test_rigidity_full_singleton_active_sets():
    # no two active players share a base vector: no pair probes, no bystanders
    from rigidity.embed import build_distribution
    from rigidity.verify import rigidity_check
    emb = build_distribution(_singleton_set())
    rep = rigidity_check(emb, "full")
    assert rep.mode == "full" and rep.ok
    assert rep.maxima["formula"] <= emb.constants.omega
    for r in rep.rows:
        if r.name.startswith("argmax_"):
            # witnesses re-evaluate to the searched maxima
            fees, _ = optimal_fees(rep.witnesses[r.name], emb.distribution)
            assert interim_revenue(rep.witnesses[r.name], fees, emb.distribution) == r.revenue


@pytest.mark.parametrize("seed", [0, 1])
def test_curve_nonincreasing(seed):
    from rigidity.divisible import gen_random_high_values
    from rigidity.embed import build_distribution
    emb = build_distribution(gen_random_high_values(5, 3, seed))
    rows = corruption_curve(emb, [F(k, 8) for k in range(9)], seed)
    ratios = [r for _, _, r, _ in rows]
    xs = [x for _, x, _, _ in rows]
    assert xs == sorted(xs, reverse=True)
    assert all(a >= b for a, b in zip(ratios, ratios[1:]))
