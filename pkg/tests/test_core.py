from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rigidity.core import (INF, JointDistribution, cp_matrix, drop, expected_welfare,
                           fmt_value, full_rank_check, insert, marginal, rank, to_value,
                           validate_distribution)
from rigidity.lp import rref

from conftest import distributions


def test_to_value_forms():
    assert to_value("3/4") == F(3, 4)
    assert to_value("0.1") == F(1, 10)
    assert to_value(2) == F(2)
    assert to_value("inf") == INF
    assert to_value(float("inf")) == INF
    with pytest.raises(TypeError):
        to_value(0.1)
    with pytest.raises(ValueError):
        to_value("1/0")
    with pytest.raises(ValueError):
        to_value("abc")


def test_fmt_roundtrip():
    for x in (F(0), F(7, 3), F(-2, 5), INF):
        assert to_value(fmt_value(x)) == x


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.data())
def test_drop_insert_inverse(v, data):
    i = data.draw(st.integers(0, len(v) - 1))
    assert insert(drop(v, i), i, v[i]) == tuple(v)


def test_validate_distribution_reports():
    bad = JointDistribution(2, (((F(1), F(2)), F(1, 2)), ((F(1), F(2)), F(1, 4))))
    msgs = validate_distribution(bad).violations
    assert any("duplicate instance" in m for m in msgs)
    assert any("do not sum to 1" in m for m in msgs)
    neg = JointDistribution(2, (((F(1), F(2)), F(0)), ((F(2), F(2)), F(1))))
    assert any("nonpositive probability" in m for m in validate_distribution(neg).violations)
    with pytest.raises(ValueError):
        JointDistribution.make([((1, 2), "1/2")])


def test_cp_matrix_small():
    # support (1,1):1/4, (1,2):1/4, (2,1):1/2 -> player 0 rows 1,2; cols (1,),(2,)
    d = JointDistribution.make([((1, 1), "1/4"), ((1, 2), "1/4"), ((2, 1), "1/2")])
    cp = cp_matrix(d, 0)
    assert cp.row_labels == (F(1), F(2))
    assert cp.entries == ((F(1, 2), F(1, 2)), (F(1), F(0)))
    assert marginal(d, 0) == [(F(1), F(1, 2)), (F(2), F(1, 2))]
    assert expected_welfare(d) == F(1, 4) + F(2, 4) + F(2, 2)
    assert full_rank_check(d).per_player == (True, True)


def test_rank_deficient():
    # both values of player 0 see the same conditional
    d = JointDistribution.uniform([(1, 1), (1, 2), (2, 1), (2, 2)])
    assert full_rank_check(d).per_player == (False, False)


@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=5))
def test_rank_matches_other_eliminations(rows):
    _, piv = rref(rows)
    assert rank(rows) == len(piv) == np.linalg.matrix_rank(np.array(rows, dtype=float))


@given(distributions())
def test_cp_rows_are_conditionals(d):
    for i in range(d.n):
        for row in cp_matrix(d, i).entries:
            assert sum(row) == 1
