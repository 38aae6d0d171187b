from fractions import Fraction as F

import pytest
from hypothesis import assume, given

from rigidity.core import JointDistribution, expected_welfare, full_rank_check
from rigidity.mech import (FeeSchedule, ThresholdMechanism, agreement_ratio, allocation,
                           check_feasible, check_interim_ir, cm_fees, expost_revenue,
                           interim_revenue, is_highest, lookahead, profit_vector, second_price,
                           winners)

from conftest import distributions

D = JointDistribution.uniform([(3, 1), (1, 2)])


def test_inclusive_win_rule():
    m = ThresholdMechanism(2, {(0, (F(1),)): F(3)})
    assert winners(m, (F(3), F(1))) == [0]
    assert winners(m, (F(2), F(1))) == []


def test_infeasible_detected():
    m = ThresholdMechanism(2, {(0, (F(1),)): F(0), (1, (F(3),)): F(0)})
    v = check_feasible(m, D)
    assert not v and v.violations[0][1] == (0, 1)
    with pytest.raises(ValueError):
        allocation(m, (F(3), F(1)))


def test_lookahead_hand_example():
    # player 0 sold at 3 on (3,1), player 1 sold at 2 on (1,2): (3 + 2) / 2
    la = lookahead(D)
    assert expost_revenue(la, D) == F(5, 2)


def test_second_price_and_ties():
    # player 1 must beat player 0's bid of 1 strictly, so his threshold is his
    # next support value 2: revenue (1 + 2) / 2
    sp = second_price(D)
    assert expost_revenue(sp, D) == F(3, 2)
    d = JointDistribution.uniform([(2, 2), (1, 3)])
    sp = second_price(d)
    assert check_feasible(sp, d)
    assert winners(sp, (F(2), F(2))) == [0]
    assert is_highest((2, 2), 0) and not is_highest((2, 2), 1)


def test_profit_and_interim_ir():
    sp = second_price(D)
    pv = profit_vector(sp, D)
    assert pv[0][F(3)] == 2 and pv[1][F(2)] == 0 and pv[0][F(1)] == 0
    fees = FeeSchedule({(0, (F(1),)): F(2)})
    assert check_interim_ir(sp, fees, D)
    assert interim_revenue(sp, fees, D) == F(3, 2) + 1
    too_much = FeeSchedule({(0, (F(1),)): F(3)})
    bad = check_interim_ir(sp, too_much, D)
    assert not bad and bad.violations[0][:2] == (0, F(3))


def test_cm_hand_example():
    res = cm_fees(D)
    assert res.ok
    assert check_interim_ir(res.mechanism, res.fees, D)
    assert interim_revenue(res.mechanism, res.fees, D) == expected_welfare(D) == F(5, 2)


def test_cm_rank_deficient():
    d = JointDistribution.uniform([(1, 1), (1, 2), (2, 1), (2, 2)])
    res = cm_fees(d)
    assert not res.ok and "rank deficient" in res.failure


@given(distributions(n_players=(2,), max_support=6, grid=(1, 2, 3, 4)))
def test_cm_extracts_welfare(d):
    assume(full_rank_check(d).ok)
    res = cm_fees(d)
    assert res.ok
    assert check_interim_ir(res.mechanism, res.fees, d)
    assert interim_revenue(res.mechanism, res.fees, d) == expected_welfare(d)


@given(distributions())
def test_lookahead_and_second_price_feasible(d):
    for mech in (lookahead(d), second_price(d)):
        assert check_feasible(mech, d)
        assert expost_revenue(mech, d) <= expected_welfare(d)


def test_agreement_ratio(kex4):
    from rigidity.embed import reference_mechanism
    mech, _ = reference_mechanism(kex4)
    x, chi = agreement_ratio(mech, kex4.set)
    assert x == 1 and set(chi) == {(0, 0), (1, 0), (2, 0)}
    x, _ = agreement_ratio(ThresholdMechanism(4, {}), kex4.set)
    assert x == 0
