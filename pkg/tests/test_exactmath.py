from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pfmirror.errors import DegenerateDivisor, DomainError, NotInvertible
from pfmirror.exactmath import (LogSeries, Series, linsolve, matrix_rank, nullspace, poly_gcd, poly_mul,
                                poly_rational_roots, rref)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def series_st(min_len=1, max_len=7, **kw):
    return st.lists(fractions, min_size=min_len, max_size=max_len).map(lambda c: Series(c, "x"))


def x(order=6):
    return Series.variable(order)


def test_difference_of_squares():
    one = Series.constant(1, 4)
    assert (one + x(4)) * (one - x(4)) == Series([1, 0, -1], "x", 4)


def test_geometric_series():
    assert 1 / (Series.constant(1, 5) - x(5)) == Series([1] * 6, "x")


def test_w0_squared():
    # hand multiplication of 1 + 2x + 34x^2
    w0 = Series([1, 2, 34])
    assert (w0 * w0).coeffs == (1, 4, 72)


def test_division_by_zero_constant():
    with pytest.raises(DegenerateDivisor):
        Series([1, 1]) / Series([0, 1])


def test_mixed_order_truncates():
    assert (Series([1, 1, 1]) * Series([1, 1])).order == 1


def test_revert_examples():
    assert Series([0, 1], "x", 5).revert() == Series([0, 1], "x", 5)
    # Lagrange inversion of q = x + x^2: Catalan numbers with alternating signs
    assert Series([0, 1, 1], "x", 5).revert().coeffs == (0, 1, -1, 2, -5, 14)
    # q = x(1 + 5x + 90x^2): x = q - 5q^2 + (2*25 - 90) q^3
    assert Series([0, 1, 5, 90]).revert().coeffs == (0, 1, -5, -40)


def test_revert_needs_linear_term():
    with pytest.raises(NotInvertible):
        Series([0, 0, 1]).revert()


def test_exp_log_examples():
    assert Series.constant(0, 4).exp() == Series.constant(1, 4)
    assert Series([1, 1], "x", 5).log().coeffs == (0, 1, Fraction(-1, 2), Fraction(1, 3), Fraction(-1, 4),
                                                   Fraction(1, 5))


def test_exp_log_domains():
    with pytest.raises(DomainError):
        Series([1, 1]).exp()
    with pytest.raises(DomainError):
        Series([2, 1]).log()


def test_json_round_trip():
    s = Series([Fraction(227, 128), -3, Fraction(10**30, 7)], "z")
    assert Series.from_json(s.to_json()) == s
    ls = LogSeries([s, s * 2], Fraction(1, 32), "z")
    back = LogSeries.from_json(ls.to_json())
    assert back.parts == ls.parts and back.scale == ls.scale


def test_linear_algebra_helpers():
    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert matrix_rank(rows) == 2
    ns = nullspace(rows, 3)
    assert len(ns) == 1
    assert all(sum(Fraction(a) * b for a, b in zip(r, ns[0])) == 0 for r in rows)
    assert linsolve([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]
    assert linsolve([[1, 1], [2, 2]], [1, 2]) is None
    _, piv = rref(rows)
    assert piv == [0, 1]


def test_rational_roots_large_coefficients():
    p = poly_mul(poly_mul((Fraction(-3, 7), 1), (Fraction(10**15 + 37, 2**40), 1)), (1, 0, 1))
    assert sorted(poly_rational_roots(p)) == sorted([Fraction(3, 7), -Fraction(10**15 + 37, 2**40)])


def test_poly_gcd():
    a = poly_mul((1, 1), (2, 1))
    b = poly_mul((1, 1), (3, 1))
    assert poly_gcd(a, b) == (1, 1)


@settings(max_examples=60, deadline=None)
@given(series_st(), series_st(), series_st())
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=50, deadline=None)
@given(st.lists(fractions, min_size=1, max_size=6), fractions.filter(lambda q: q != 0))
def test_compose_revert_identity(tail, lin):
    s = Series([0, lin] + tail, "x")
    ident = Series([0, 1], "x", s.order)
    assert s.compose(s.revert()) == ident
    assert s.revert().compose(s) == ident


@settings(max_examples=50, deadline=None)
@given(st.lists(fractions, min_size=1, max_size=7))
def test_exp_log_inverse(tail):
    s = Series([1] + tail, "x")
    assert s.log().exp() == s
    t = Series([0] + tail, "x")
    assert t.exp().log() == t


@settings(max_examples=50, deadline=None)
@given(series_st(), st.lists(fractions, min_size=0, max_size=6), fractions.filter(lambda q: q != 0))
def test_division_inverts_multiplication(a, tail, b0):
    b = Series([b0] + tail, "x")
    q = a / b
    n = min(a.order, b.order)
    assert (q * b).truncate(n) == a.truncate(n)


@settings(max_examples=50, deadline=None)
@given(series_st(), series_st())
def test_results_reduced(a, b):
    for c in (a * b).coeffs:
        assert isinstance(c, Fraction) and c.denominator > 0
        assert Fraction(c.numerator, c.denominator) == c
