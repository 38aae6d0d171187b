from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from rigidity.core import validate_distribution
from rigidity.divisible import gen_family_member, gen_geometric, gen_random_high_values
from rigidity.embed import (almost_linear_revenue_bound, build_distribution, f_star,
                            reference_mechanism, reference_mechanism_almost_linear,
                            reference_revenue_bound, resolve_constants)
from rigidity.mech import check_feasible, check_interim_ir, interim_revenue
from rigidity.verify import optimal_fees


def test_constants_k_excluded_4(kex4):
    # gap 11, u'-v in {11 - 11/8, 11 - 11/12, 11 - 11/16}: eps = 77/16, fee cap 77/16
    c = kex4.constants
    assert c.eps == F(77, 16)
    assert c.fee_cap == {0: F(77, 16)}
    assert c.e == F(1, 4)
    assert all(c.y[i] == (F(1, 2), F(1), F(2)) for i in range(3))
    assert all(c.q[i] == (F(1, 2), F(1, 4), F(1, 4)) for i in range(3))
    assert c.delta_j == {0: F(6, 385)}


def test_support_accounting(kex4, kex5):
    assert len(kex4.distribution) == kex4.counted_support_bound() == 32
    assert kex4.stated_support_bound() == 34
    assert len(kex5.distribution) == kex5.counted_support_bound() == 161
    for emb in (kex4, kex5):
        assert validate_distribution(emb.distribution)
        assert emb.p_mass() == F(9, 10)
        assert emb.constants.filler_mass > 0


def test_equal_revenue_ladder(kex5):
    c = kex5.constants
    for i in kex5.set.active_players:
        y, q = c.y[i], c.q[i]
        assert sum(q) == 1
        for r in range(len(y)):
            assert y[r] * sum(q[r:]) == y[0]


def test_reference_revenue_bound_value(kex4):
    assert reference_revenue_bound(kex4) == F(9, 40)


@pytest.mark.parametrize("which", ["kex4", "kex5"])
def test_reference_mechanisms(which, request):
    emb = request.getfixturevalue(which)
    d = emb.distribution
    for build in (reference_mechanism, reference_mechanism_almost_linear):
        mech, fees = build(emb)
        assert check_feasible(mech, d)
        assert check_interim_ir(mech, fees, d)
    mech, fees = reference_mechanism(emb)
    assert interim_revenue(mech, fees, d) >= reference_revenue_bound(emb)
    # LP fees dominate the explicit schedule
    _, lp_total = optimal_fees(mech, d)
    assert lp_total >= sum(fees.fees[k] * d.pr_profile(k[0], k[1]) for k in fees.fees)
    mech, fees = reference_mechanism_almost_linear(emb)
    assert interim_revenue(mech, fees, d) >= almost_linear_revenue_bound(emb) - emb.constants.omega


def test_f_star_conventions(kex4):
    assert f_star(kex4, 0, 0, t=F(0)) == kex4.constants.e
    assert f_star(kex4, 0, 0, t=F(100)) == 0
    assert f_star(kex4, 0, 0, t=float("inf")) == 0


def test_omega_domain():
    from rigidity.divisible import gen_k_excluded
    with pytest.raises(ValueError):
        resolve_constants(gen_k_excluded(4, 1, 1, F(1, 10)), omega=F(1, 5))


@settings(max_examples=8)
@given(st.sampled_from(["rhv", "geo", "family"]), st.integers(0, 10 ** 6))
def test_random_embeddings(method, seed):
    if method == "rhv":
        s = gen_random_high_values(3, 2, seed)
    elif method == "geo":
        s = gen_geometric(3, 2, seed)
    else:
        s = gen_family_member(4, 2, [[1, 2], [2, 3]], seed)
    emb = build_distribution(s)
    d = emb.distribution
    assert validate_distribution(d) and emb.p_mass() == F(9, 10)
    assert len(d) <= emb.stated_support_bound()
    for build in (reference_mechanism, reference_mechanism_almost_linear):
        mech, fees = build(emb)
        assert check_feasible(mech, d) and check_interim_ir(mech, fees, d)
