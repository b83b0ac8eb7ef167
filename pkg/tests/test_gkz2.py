from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from pfmirror.gkz2 import (BiSeries, chart_operators, chart_regular_dimension, diagonal_check, diagonal_node_minpoly,
                           diagonal_nodes, dis0, dis0_symmetric, double_series, gkz_annihilate_check, gkz_operators,
                           gkz_report, mp_mul, mp_pow, mp_var, same_up_to_unit)
from pfmirror.pfode import build_quintic_operator


@pytest.fixture(scope="module")
def series():
    return double_series(14)


def test_coefficients(series):
    assert series[0, 0] == 1
    assert series[1, 0] == series[0, 1] == 1
    assert series[1, 1] == 32
    assert series[2, 3] == comb(5, 2) ** 5


def test_diagonal_sums(series):
    # 1, 1 + 1, 1 + 32 + 1
    assert series.diagonal().coeffs[:3] == (1, 2, 34)


def test_annihilation(series):
    assert gkz_annihilate_check(gkz_operators(), series)
    assert not gkz_annihilate_check(gkz_operators(power=4), series)


def test_trivial_series():
    ops = gkz_operators()
    const = BiSeries([[Fraction(1)] * 6 for _ in range(6)], 5)
    assert not gkz_annihilate_check(ops, const)
    assert gkz_annihilate_check(ops, BiSeries.zero(5))


def test_diagonal_restriction(reye, series):
    assert diagonal_check(reye, series)
    assert not diagonal_check(reye, double_series(14, power=4))
    assert not diagonal_check(build_quintic_operator(), series)
    with pytest.raises(ValueError):
        diagonal_check(reye, double_series(3))


def test_symmetry(series):
    assert series.is_symmetric()
    lopsided = BiSeries([[Fraction(n) for m in range(4)] for n in range(4)], 3)
    assert not lopsided.is_symmetric()


@pytest.mark.parametrize("chart", ["0", "1", "2"])
def test_chart_regular_dimension(chart):
    assert chart_regular_dimension(chart, 6) == 1


def test_chart_forms_agree():
    a, b = chart_operators("1"), chart_operators("2")
    assert [o.terms for o in a] == [o.terms for o in b]
    with pytest.raises(ValueError):
        chart_operators("3")


def test_discriminant_symmetric():
    assert dis0_symmetric()
    # (u + v + w)^5 leading part
    assert dis0()[(5, 0, 0)] == 1


def test_nodes():
    mp = diagonal_node_minpoly()
    assert same_up_to_unit(mp, (1, 11, -1))
    vals = sorted(n.approx.real for n in diagonal_nodes())
    assert vals[0] == pytest.approx(-0.0901699437, abs=1e-9)
    assert vals[1] == pytest.approx(11.0901699437, abs=1e-9)


def test_report_passes():
    rep = gkz_report(order=10, chart_order=4)
    assert all(r["status"] != "fail" for r in rep)
    assert {"annihilate", "diagonal", "chart_1", "node_minpoly"} <= {r["check"] for r in rep}


small = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
                        st.fractions(min_value=-5, max_value=5, max_denominator=4), max_size=5)


@settings(max_examples=40, deadline=None)
@given(small, small, small)
def test_mpoly_ring(p, q, r):
    p, q, r = ({k: v for k, v in d.items() if v} for d in (p, q, r))
    assert mp_mul(mp_mul(p, q), r) == mp_mul(p, mp_mul(q, r))
    assert mp_mul(p, q) == mp_mul(q, p)


def test_mp_pow_binomial():
    s = {(1, 0, 0): Fraction(1), (0, 1, 0): Fraction(1)}
    assert mp_pow(s, 4, 3)[(2, 2, 0)] == 6
    assert mp_var(2, 3) == {(0, 0, 1): 1}
