from fractions import Fraction
from math import comb

import pytest

from pfmirror.errors import NotMUM, OrderTooSmall
from pfmirror.exactmath import LogSeries, Series, poly_pow, poly_scale
from pfmirror.gkz2 import diagonal_check, double_series
from pfmirror.pfode import (DiffOperator, Location, annihilation_residual, apparent_check, build_quintic_operator,
                            build_reye_operator_variant, frobenius_basis, fuchs_relation_value,
                            indicial_exponents, riemann_p_symbol, singular_points, transform_infinity)


def toy():
    # theta^4 - x (theta + 1)^4
    return DiffOperator.from_x_form({0: [0, 0, 0, 0, 1], 1: poly_scale(poly_pow((1, 1), 4), -1)})


def test_operator_coefficients(reye):
    assert reye.x_form[0] == (0, 0, 0, 0, 49)
    assert reye.x_form[1][0] == -98
    assert reye.x_form[1][4] == -7 * 155
    # 512 x^5 (theta + 1)^4
    assert reye.x_form[5] == tuple(Fraction(512 * comb(4, k)) for k in range(5))


def test_variant_operator_misses_the_diagonal_series(reye):
    s = double_series(12)
    assert diagonal_check(reye, s)
    assert not diagonal_check(build_reye_operator_variant(), s)


def test_singular_points(reye):
    labels = {loc.label() for loc in singular_points(reye)}
    assert {"0", "1/32", "7/4", "inf"} <= labels
    alg = [loc for loc in singular_points(reye) if loc.kind == "algebraic"]
    assert len(alg) == 2 and all(loc.minpoly == (-1, -11, 1) for loc in alg)
    assert [loc.label() for loc in singular_points(toy())] == ["0", "1", "inf"]


@pytest.mark.parametrize("point, exps", [("0", (0, 0, 0, 0)), ("7/4", (0, 1, 3, 4)), ("inf", (1, 1, 1, 1)),
                                          ("1/32", (0, 1, 1, 2)), ("alpha1", (0, 1, 1, 2)),
                                          ("alpha2", (0, 1, 1, 2))])
def test_indicial_exponents(reye, point, exps):
    assert tuple(indicial_exponents(reye, point)) == exps


def test_fuchs_relation(reye):
    ps = riemann_p_symbol(reye)
    assert sum(sum(sp.exponents) for sp in ps) == fuchs_relation_value(4, len(ps))


def test_apparent(reye):
    assert apparent_check(reye, "7/4")
    assert not apparent_check(reye, "1/32")
    flags = {sp.location.label(): (sp.is_apparent, sp.is_MUM) for sp in riemann_p_symbol(reye)}
    assert flags["7/4"] == (True, False)
    assert flags["0"] == (False, True) and flags["inf"] == (False, True)


def test_apparent_ordinary_point():
    # an ordinary point of theta^2 - x theta^2 has exponents {0, 1} and no logs
    op = DiffOperator.from_x_form({0: [0, 0, 1], 1: [0, 0, -1]})
    assert apparent_check(op, "1/2")


def test_frobenius_prefixes(reye):
    fb = frobenius_basis(reye, "0", 4)
    assert fb.regular_parts[0].coeffs[:3] == (1, 2, 34)
    fbi = frobenius_basis(reye, "inf", 4)
    assert fbi.exponent == 1
    assert fbi.regular_parts[0].coeffs == (0, 1, Fraction(1, 2), Fraction(227, 128), Fraction(4849, 512))


def test_frobenius_annihilated_and_normalized(reye):
    for center in ("0", "inf"):
        fb = frobenius_basis(reye, center, 14, Fraction(1, 32) if center == "inf" else 1)
        for w in fb.solutions:
            res = annihilation_residual(fb.operator, w)
            assert all(c == 0 for part in res.parts for c in part.coeffs)
        e = int(fb.exponent)
        r0 = fb.regular_parts[0].shift_down(e)
        for r in fb.regular_parts[1:]:
            assert (r.shift_down(e) / r0)[0] == 0


def test_printed_sign_convention(reye):
    # w2 = -w0 L^2 + 2 w1 L + w2reg and w3 = w0 L^3 - 3 w1 L^2 + 3 w2 L + w3reg
    fb = frobenius_basis(reye, "0", 8)
    r = fb.regular_parts
    w0, w1, w2, w3 = (s.parts for s in fb.solutions)
    # coefficients of L^k in the printed forms, with w1 = w0 L + r1 and w2 as above
    assert w2[2] == -r[0] + 2 * r[0] and w2[1] == 2 * r[1] and w2[0] == r[2]
    assert w3[3] == r[0] - 3 * r[0] + 3 * r[0]
    assert w3[2] == -3 * r[1] + 3 * 2 * r[1]
    assert w3[1] == 3 * r[2] and w3[0] == r[3]


def test_mirror_bracket_from_regular_parts(reye):
    fb = frobenius_basis(reye, "0", 4)
    assert (fb.regular_parts[1] / fb.regular_parts[0]).exp().coeffs[:3] == (1, 5, 90)


def test_frobenius_errors(reye):
    with pytest.raises(NotMUM):
        frobenius_basis(reye, "1/32", 10)
    with pytest.raises(OrderTooSmall):
        frobenius_basis(reye, "0", 3)


def test_transform_infinity(reye):
    z = transform_infinity(reye)
    w = Series([0, 1, Fraction(1, 2), Fraction(227, 128)], z.var)
    assert z.apply(w).parts[0].coeffs == (0, 0, 0, 0)
    back = transform_infinity(z, "x").normalized()
    ref = reye.normalized()
    k = back.theta_coeffs[4][0] / ref.theta_coeffs[4][0]
    assert back == ref.scaled(k)


def test_transform_theta():
    # theta_x -> -theta_z
    op = DiffOperator([[0], [1]], "x")
    t = transform_infinity(op)
    assert t.var == "z"
    assert t.theta_coeffs[1] == (-1,) and not t.theta_coeffs[0]


def test_quintic_frobenius():
    fb = frobenius_basis(build_quintic_operator(), "0", 4)
    assert fb.regular_parts[0].coeffs == (1, 120, 113400, 168168000, 305540235000)


def test_location_parse():
    assert Location.parse("inf").kind == "infinity"
    assert Location.parse("alpha2").numeric(20) > 11
    assert Location.parse("7/4").value == Fraction(7, 4)


def test_operator_json_round_trip(reye):
    assert DiffOperator.from_json(reye.to_json()) == reye
    from pfmirror.config import DATA_DIR
    assert DiffOperator.from_json((DATA_DIR / "reye.json").read_text()) == reye


def test_logseries_apply_type(reye):
    fb = frobenius_basis(reye, "0", 5)
    assert isinstance(annihilation_residual(reye, fb.solutions[2]), LogSeries)
