from fractions import Fraction

import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, settings, strategies as st

from pfmirror.errors import DomainError, NotIntegral, PrecisionExhausted
from pfmirror.monodromy import (BASEPOINT, TABLE_POINTS, AnsatzConstants, APComplex, Continuator, Path,
                                SymplecticForm, _ctx, compare_with_published, find_conjugator, frobenius_frame,
                                identity, inverse, local_monodromy, log_shift_matrix, loop_path, matmul, matsub,
                                max_abs, published_table1, transversality_residuals)
from pfmirror.pfode import frobenius_basis

PUBLISHED = published_table1()


def square(x0, y0, side):
    x0, y0, side = Fraction(x0), Fraction(y0), Fraction(side)
    pts = [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side), (x0, y0)]
    return Path(tuple(APComplex(str(float(a)), str(float(b))) for a, b in pts))


@pytest.fixture(scope="module")
def engine(reye):
    return Continuator(reye, 128)


def test_loop_without_singularity_is_trivial(engine):
    with engine.ctx:
        T = engine.transport(square("0.3", "0.3", "0.1"))
        assert max_abs(matsub(T, identity())) < 1e-30


def test_reverse_transport_inverts(engine):
    p = Path((APComplex("0.001"), APComplex("0.01", "0.01"), APComplex("0.2", "0.05")))
    with engine.ctx:
        A, B = engine.transport(p), engine.transport(p.reversed())
        # the jets near x = 0 are badly scaled, so measure against the norms
        assert max_abs(matsub(matmul(B, A), identity())) / (max_abs(A) * max_abs(B)) < 1e-30


def test_transport_matches_series(reye, engine):
    # F(x1) = T F(x0) with both frames summed from the Frobenius series
    fb = frobenius_basis(reye, "0", 60)
    with engine.ctx:
        F0 = frobenius_frame(fb, mpc("0.001"), 128).matrix
        F1 = frobenius_frame(fb, mpc(mpfr("0.002"), mpfr("0.001")), 128).matrix
        T = engine.transport(Path((APComplex("0.001"), APComplex("0.002", "0.001"))))
        assert max_abs(matsub(matmul(T, F0), F1)) / (max_abs(T) * max_abs(F0)) < 1e-30


def test_precision_exhausted_at_low_precision(reye):
    eng = Continuator(reye, 64)
    with pytest.raises(PrecisionExhausted):
        eng.transport_checked(loop_path("0", 64))


def test_path_checks():
    p = square("0.3", "0.3", "0.1")
    assert p.closed
    assert Path.from_json(p.to_json()) == p
    with pytest.raises(DomainError):
        Path((APComplex("0"), APComplex("0.1"))).check([mpc(Fraction(1, 32))])
    with pytest.raises(DomainError):
        p + Path((APComplex("9"), APComplex("10")))


def test_loop_paths_start_at_basepoint():
    for point in ("1/32", "alpha1", "7/4", "alpha2"):
        lp = loop_path(point, 128)
        assert lp.closed
        with _ctx(128):
            assert abs(lp.start.value() - BASEPOINT.value()) < 1e-40


def test_table_reproduced(monodromy_run):
    _, _, table = monodromy_run
    cmp = compare_with_published(table, PUBLISHED)
    assert all(cmp["exact"].values()), cmp
    assert cmp["conjugator"] is None
    for row in ("Pi", "Pi~"):
        for p in TABLE_POINTS:
            assert table[row][p].residual < 1e-8
            assert SymplecticForm.preserves(table[row][p].matrix)


def test_table_consistency(monodromy_run):
    _, _, table = monodromy_run
    checks = table["checks"]
    assert checks["apparent_identity"]
    assert checks["product_is_identity"]
    assert checks["x0_symbolic_matches"] and checks["z0_symbolic_matches"]
    assert all(err < 1e-30 for err in table["errors"].values())


def test_fit_constants(monodromy_run):
    _, fit, _ = monodromy_run
    k = fit.constants
    assert (k.a, k.kappa_t, k.beta_t, k.a_t, k.c, k.N_z) == (Fraction(-1, 2), 10, Fraction(-5, 3), 0,
                                                             Fraction(1, 32), Fraction(1, 4))
    assert fit.S_xz == PUBLISHED["S_xz"]
    assert SymplecticForm.preserves(fit.S_xz)
    assert k.notes["beta_t_mod_1"] == "1/3"
    # Im gamma~ matches chi = -50 for the z-side geometry
    assert float(k.notes["chi_from_gamma_t"]) == pytest.approx(-50, abs=1e-20)


def test_tilde_basis_local_monodromy(reye, monodromy_run):
    ctx, fit, _ = monodromy_run
    r = local_monodromy(reye, "alpha2", 256, ctx=ctx, basis="Pi~", fit=fit)
    assert r.matrix == PUBLISHED["Pi~"]["alpha2"]


def test_wrong_x_parameter_not_integral(reye, monodromy_run):
    ctx, _, _ = monodromy_run
    with pytest.raises(NotIntegral):
        local_monodromy(reye, "alpha1", 256, AnsatzConstants(a=Fraction(1, 3)), ctx=ctx)


def test_transversality(reye):
    good = transversality_residuals(reye, (Fraction(1, 100), Fraction(1, 60)), 256)
    assert good["first"] < 1e-60 and good["second"] < 1e-60 and good["third_relative"] < 1e-60
    bad = transversality_residuals(reye, (Fraction(1, 100),), 256, mutate="kappa_sign")
    assert bad["first"] > 1e-6 or bad["third_relative"] > 1e-6


def test_find_conjugator(monodromy_run):
    _, _, table = monodromy_run
    ours = [table["Pi"][p].matrix for p in TABLE_POINTS]
    G = [[1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [0, 0, -1, 1]]
    Gi = [[1, 0, 0, 0], [-1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 1, 1]]

    def conj(M):
        return [[sum(G[i][k] * M[k][l] * Gi[l][j] for k in range(4) for l in range(4)) for j in range(4)]
                for i in range(4)]

    found = find_conjugator(ours, [conj(M) for M in ours])
    assert found in (G, [[-v for v in row] for row in G])
    assert find_conjugator(ours, ours) == [list(r) for r in identity_int()]


def identity_int():
    return [[int(i == j) for j in range(4)] for i in range(4)]


def test_symplectic_form_rejects():
    assert SymplecticForm.preserves(identity_int())
    assert not SymplecticForm.preserves([[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


small = st.fractions(min_value=-3, max_value=3, max_denominator=8)


@settings(max_examples=30, deadline=None)
@given(small, small)
def test_log_shift_is_a_group(a, b):
    with _ctx(128):
        lhs = matmul(log_shift_matrix(a), log_shift_matrix(b))
        rhs = log_shift_matrix(a + b)
        assert max_abs(matsub(lhs, rhs)) < 1e-30
        assert max_abs(matsub(inverse(log_shift_matrix(a)), log_shift_matrix(-a))) < 1e-30


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([(row, p) for row in ("Pi", "Pi~") for p in TABLE_POINTS]), min_size=1,
                max_size=6))
def test_words_in_generators_are_symplectic(word):
    # generators of either basis row; mixed words still preserve S since both rows are integral symplectic
    M = identity_int()
    for row, p in word:
        N = PUBLISHED[row][p]
        M = [[sum(M[i][k] * N[k][j] for k in range(4)) for j in range(4)] for i in range(4)]
    assert SymplecticForm.preserves(M)


@pytest.mark.slow
def test_doubling_stable(reye, monodromy_run):
    from pfmirror.monodromy import MonodromyContext, fit_integral_basis, monodromy_table
    _, fit, table = monodromy_run
    ctx = MonodromyContext(reye, 512)
    fit2 = fit_integral_basis(reye, 512, ctx)
    table2 = monodromy_table(reye, 512, ctx, fit2)
    assert fit2.S_xz == fit.S_xz
    assert all(table2[row][p].matrix == table[row][p].matrix for row in ("Pi", "Pi~") for p in TABLE_POINTS)
