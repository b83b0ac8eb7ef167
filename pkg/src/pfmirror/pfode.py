"""Fuchsian differential operators in theta form and their local analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb, factorial
from typing import Sequence

import mpmath

from .errors import DomainError, NotFuchsian, NotMUM, OrderTooSmall
from .exactmath import (
    LogSeries,
    Poly,
    Series,
    poly,
    poly_add,
    poly_divmod,
    poly_eval,
    poly_gcd,
    poly_monic,
    poly_mul,
    poly_rational_roots,
    poly_root_multiplicity,
    poly_scale,
    poly_shift,
    poly_str,
    rational,
)

EXPONENT_DIGITS = 64
SNAP_TOL = mpmath.mpf("1e-30")


def _stirling2(n: int, k: int) -> int:
    return sum((-1) ** (k - i) * comb(k, i) * i ** n for i in range(k + 1)) // factorial(k)


def _falling(j: int) -> Poly:
    """theta (theta-1) ... (theta-j+1) as a polynomial in theta."""
    out: Poly = (Fraction(1),)
    for i in range(j):
        out = poly_mul(out, poly([-i, 1]))
    return out


class DiffOperator:
    """sum_k p_k(v) theta_v^k with polynomial coefficients p_k (exact rationals)."""

    def __init__(self, theta_coeffs: Sequence[Sequence], var: str = "x"):
        coeffs = [poly(p) for p in theta_coeffs]
        while len(coeffs) > 1 and not coeffs[-1]:
            coeffs.pop()
        if not coeffs or not coeffs[-1]:
            raise ValueError("operator has no nonzero coefficient")
        self.theta_coeffs: tuple[Poly, ...] = tuple(coeffs)
        self.var = var

    # constructors ---------------------------------------------------------
    @classmethod
    def from_x_form(cls, parts: dict[int, Sequence], var: str = "x") -> "DiffOperator":
        """Build from {j: P_j(theta)} meaning sum_j v^j P_j(theta)."""
        order = max(len(poly(P)) for P in parts.values()) - 1
        deg = max(parts)
        coeffs = [[Fraction(0)] * (deg + 1) for _ in range(order + 1)]
        for j, P in parts.items():
            for k, c in enumerate(poly(P)):
                coeffs[k][j] += c
        return cls(coeffs, var)

    # views ------------------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.theta_coeffs) - 1

    @cached_property
    def x_form(self) -> dict[int, Poly]:
        """{j: P_j(theta)} with the operator equal to sum_j v^j P_j(theta)."""
        deg = max(len(p) for p in self.theta_coeffs) - 1
        out = {}
        for j in range(deg + 1):
            P = poly(p[j] if j < len(p) else 0 for p in self.theta_coeffs)
            if P:
                out[j] = P
        return out

    @cached_property
    def dx_form(self) -> tuple[Poly, ...]:
        """A_0..A_n with the operator equal to sum_j A_j(v) (d/dv)^j."""
        n = self.order
        out = []
        for j in range(n + 1):
            acc: Poly = ()
            for k in range(j, n + 1):
                s = _stirling2(k, j)
                if s:
                    acc = poly_add(acc, poly_scale(self.theta_coeffs[k], s))
            out.append(poly_mul(acc, poly([0] * j + [1])))
        return tuple(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, DiffOperator) and self.theta_coeffs == other.theta_coeffs \
            and self.var == other.var

    def __hash__(self) -> int:
        return hash((self.theta_coeffs, self.var))

    def __repr__(self) -> str:
        terms = []
        for j, P in self.x_form.items():
            terms.append(f"{self.var}^{j}*({poly_str(P, 'T')})")
        return f"DiffOperator[{' + '.join(terms)}]"

    def scaled(self, c) -> "DiffOperator":
        return DiffOperator([poly_scale(p, rational(c)) for p in self.theta_coeffs], self.var)

    def normalized(self) -> "DiffOperator":
        """Divide out the largest common power of v."""
        v = min(next(i for i, c in enumerate(p) if c) for p in self.theta_coeffs if p)
        return DiffOperator([p[v:] for p in self.theta_coeffs], self.var) if v else self

    def rename(self, var: str) -> "DiffOperator":
        return DiffOperator(self.theta_coeffs, var)

    # application ----------------------------------------------------------
    def apply(self, f):
        """Apply to a Series or LogSeries (exact; truncation order is preserved)."""
        if isinstance(f, Series):
            f = LogSeries([f])
        out = None
        cur = f
        for k, p in enumerate(self.theta_coeffs):
            if k:
                cur = cur.theta()
            if p:
                term = LogSeries([_poly_times_series(p, s) for s in cur.parts], cur.scale, cur.var)
                out = term if out is None else out + term
        return out

    # serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        return {"var": self.var, "theta_coeffs": [[str(c) for c in p] for p in self.theta_coeffs]}

    @classmethod
    def from_json(cls, obj) -> "DiffOperator":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls([[Fraction(c) for c in p] for p in obj["theta_coeffs"]], obj.get("var", "x"))


def _poly_times_series(p: Poly, s: Series) -> Series:
    out = [Fraction(0)] * len(s)
    for i, c in enumerate(p):
        if c:
            for n in range(len(s) - i):
                if s[n]:
                    out[n + i] += c * s[n]
    return Series(out, s.var)


# ---------------------------------------------------------------------------
# the shipped operator
# ---------------------------------------------------------------------------

# Coefficients of x^j P_j(theta); P_j given low theta power first.
_REYE_X_FORM = {
    0: [0, 0, 0, 0, 49],
    1: [-7 * 14, -7 * 91, -7 * 234, -7 * 286, -7 * 155],
    2: [-15736, -66094, -102261, -68044, -16105],
    3: [8 * 476, 8 * 3759, 8 * 9071, 8 * 8589, 8 * 2625],
    4: [-16 * 184, -16 * 806, -16 * 1439, -16 * 1266, -16 * 465],
    5: [512, 2048, 3072, 2048, 512],
}


def build_reye_operator() -> DiffOperator:
    """The order-4 Picard-Fuchs operator of the diagonal family.

    Every coefficient is pinned by annihilation of the diagonal GKZ series.
    """
    return DiffOperator.from_x_form(_REYE_X_FORM, "x")


def build_reye_operator_variant() -> DiffOperator:
    """Variant with theta^3 coefficient 680044 at x^2 and the 8(...) bracket at x^2; it fails the GKZ check."""
    parts = {j: list(P) for j, P in _REYE_X_FORM.items()}
    parts[2] = [-15736, -66094, -102261, -680044, -16105]
    x3 = parts.pop(3)
    parts[2] = [a + b for a, b in zip(parts[2], x3)]
    return DiffOperator.from_x_form(parts, "x")


def build_quintic_operator() -> DiffOperator:
    """theta^4 - 5^5 x (theta+1/5)(theta+2/5)(theta+3/5)(theta+4/5)."""
    P1: Poly = (Fraction(1),)
    for k in range(1, 5):
        P1 = poly_mul(P1, poly([Fraction(k, 5), 1]))
    return DiffOperator.from_x_form({0: [0, 0, 0, 0, 1], 1: poly_scale(P1, -3125)}, "x")


# ---------------------------------------------------------------------------
# singular points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Location:
    """A point of P^1: rational, a root of an irreducible polynomial, or infinity."""

    kind: str
    value: Fraction | None = None
    minpoly: Poly | None = None
    index: int = 0

    @staticmethod
    def rational(v) -> "Location":
        return Location("rational", rational(v))

    @staticmethod
    def infinity() -> "Location":
        return Location("infinity")

    @staticmethod
    def root_of(minpoly: Sequence, index: int) -> "Location":
        return Location("algebraic", None, poly_monic(poly(minpoly)), index)

    @staticmethod
    def parse(text) -> "Location":
        if isinstance(text, Location):
            return text
        s = str(text).strip().lower()
        if s in ("inf", "infinity", "oo"):
            return Location.infinity()
        if s.startswith("alpha"):
            return Location.root_of([1, 11, -1], int(s[5:]) - 1)
        return Location.rational(Fraction(s))

    def numeric(self, dps: int = EXPONENT_DIGITS):
        with mpmath.workdps(dps + 10):
            if self.kind == "rational":
                return mpmath.mpf(self.value.numerator) / self.value.denominator
            if self.kind == "infinity":
                return mpmath.inf
            roots = _real_sorted_roots(self.minpoly)
            return +roots[self.index]

    def label(self) -> str:
        if self.kind == "rational":
            return str(self.value)
        if self.kind == "infinity":
            return "inf"
        return f"root{self.index + 1}({poly_str(self.minpoly)})"

    def __str__(self) -> str:
        return self.label()


def _real_sorted_roots(p: Poly):
    coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(p)]
    roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    return sorted(roots, key=lambda r: (mpmath.re(r), mpmath.im(r)))


@dataclass
class SingularPoint:
    location: Location
    exponents: tuple
    is_apparent: bool = False
    is_MUM: bool = False

    def to_json(self) -> dict:
        return {"point": self.location.label(),
                "exponents": [str(e) for e in self.exponents],
                "apparent": self.is_apparent, "mum": self.is_MUM}


def _irreducible_factors(p: Poly) -> list[tuple[Poly, int]]:
    """Factor p over Q as far as rational roots allow; leftovers are kept whole."""
    p = poly_monic(p)
    out = []
    for r in poly_rational_roots(p):
        lin = poly([-r, 1])
        m = poly_root_multiplicity(p, lin)
        out.append((lin, m))
        for _ in range(m):
            p = poly_divmod(p, lin)[0]
    if len(p) > 1:
        # square-free decomposition of the remainder
        while len(p) > 1:
            g = poly_gcd(p, poly(i * p[i] for i in range(1, len(p))))
            sq = poly_divmod(p, g)[0] if len(g) > 1 else p
            sq = poly_monic(sq)
            m = poly_root_multiplicity(p, sq)
            out.append((sq, m))
            for _ in range(m):
                p = poly_divmod(p, sq)[0]
    return out


def singular_points(op: DiffOperator) -> list[Location]:
    """Roots of the leading d/dv coefficient, plus 0 and infinity."""
    lead = op.dx_form[-1]
    locs = [Location.rational(0)]
    rat, alg = [], []
    for f, _m in _irreducible_factors(lead):
        if len(f) == 2:
            r = -f[0] / f[1]
            if r != 0:
                rat.append(Location.rational(r))
        else:
            for i in range(len(f) - 1):
                alg.append(Location.root_of(f, i))
    locs += sorted(rat, key=lambda l: l.value) + alg + [Location.infinity()]
    return locs


# ---------------------------------------------------------------------------
# local theta forms and exponents
# ---------------------------------------------------------------------------

def transform_infinity(op: DiffOperator, var: str | None = None) -> DiffOperator:
    """The operator in w = 1/v: theta_v = -theta_w, cleared to polynomial theta form."""
    if var is None:
        var = {"x": "z", "z": "x"}.get(op.var, op.var + "_inv")
    xf = op.x_form
    deg = max(xf)
    parts = {}
    for j, P in xf.items():
        parts[deg - j] = poly((-1) ** k * c for k, c in enumerate(P))
    return DiffOperator.from_x_form(parts, var).normalized()


def local_theta_form(op: DiffOperator, center) -> DiffOperator:
    """Operator in t = v - center (rational center) as sum_m t^m Q_m(theta_t)."""
    loc = Location.parse(center) if not isinstance(center, Location) else center
    if loc.kind == "infinity":
        return transform_infinity(op).normalized()
    if loc.kind != "rational":
        raise DomainError("exact local forms need a rational center")
    p = loc.value
    if p == 0:
        return op.rename("t").normalized()
    shifted = [poly(poly_shift(A, p)) for A in op.dx_form]
    return DiffOperator.from_x_form(_theta_parts(shifted), "t")


def _valuation(p: Sequence) -> float:
    for i, c in enumerate(p):
        if c != 0:
            return i
    return float("inf")


def _theta_parts(shifted: Sequence[Sequence], valuations: Sequence | None = None) -> dict:
    """From sum_j A_j(t) D^j to {m: Q_m(theta)} after multiplying by t^s."""
    n = len(shifted) - 1
    vals = valuations or [_valuation(A) for A in shifted]
    s = max(j - vals[j] for j in range(n + 1) if vals[j] != float("inf"))
    parts: dict[int, list] = {}
    for j, A in enumerate(shifted):
        if vals[j] == float("inf"):
            continue
        phi = _falling(j)
        for i in range(int(vals[j]), len(A)):
            c = A[i]
            if c == 0:
                continue
            m = i - j + s
            acc = parts.setdefault(m, [0] * (n + 1))
            for k, f in enumerate(phi):
                acc[k] = acc[k] + c * f
    return parts


def indicial_polynomial(op: DiffOperator, point) -> Poly:
    """Exact indicial polynomial at a rational point or infinity."""
    loc = Location.parse(point)
    local = local_theta_form(op, loc)
    lowest = min(local.x_form)
    Q0 = local.x_form[lowest]
    if len(Q0) - 1 != op.order:
        raise NotFuchsian(f"{loc.label()} is an irregular singular point")
    return Q0


def indicial_exponents(op: DiffOperator, point) -> tuple:
    """Local exponents, sorted. Exact for rational points and infinity;
    snapped to integers for points defined by an irreducible polynomial."""
    loc = Location.parse(point)
    if loc.kind != "algebraic":
        Q0 = indicial_polynomial(op, loc)
        roots = []
        rest = Q0
        for r in poly_rational_roots(Q0):
            m = poly_root_multiplicity(rest, poly([-r, 1]))
            roots += [r] * m
        if len(roots) != op.order:
            raise DomainError(f"non-rational local exponents at {loc.label()}")
        return tuple(sorted(roots))
    return _algebraic_exponents(op, loc)


def _algebraic_exponents(op: DiffOperator, loc: Location) -> tuple:
    with mpmath.workdps(EXPONENT_DIGITS + 20):
        p = loc.numeric(EXPONENT_DIGITS + 20)
        vals = [poly_root_multiplicity(A, loc.minpoly) if A else float("inf") for A in op.dx_form]
        shifted = []
        for A, v in zip(op.dx_form, vals):
            coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in A]
            sh = poly_shift(coeffs, p) if coeffs else []
            if v != float("inf"):
                sh = [mpmath.mpf(0)] * v + list(sh[v:])
            shifted.append(sh)
        parts = _theta_parts(shifted, vals)
        Q0 = parts[min(parts)]
        if abs(Q0[-1]) < SNAP_TOL:
            raise NotFuchsian(f"{loc.label()} is an irregular singular point")
        roots = mpmath.polyroots(list(reversed(Q0)), maxsteps=400, extraprec=400)
        snapped = []
        for r in roots:
            k = int(mpmath.nint(mpmath.re(r)))
            if abs(r - k) > SNAP_TOL:
                raise DomainError(f"exponent {mpmath.nstr(r, 20)} at {loc.label()} is not integral")
            snapped.append(Fraction(k))
        return tuple(sorted(snapped))


def fuchs_relation_value(order: int, n_singular: int) -> Fraction:
    """Required total of all local exponents for a Fuchsian operator."""
    return Fraction(order * (order - 1) * (n_singular - 2), 2)


# ---------------------------------------------------------------------------
# apparent singularities
# ---------------------------------------------------------------------------

def apparent_check(op: DiffOperator, point) -> bool:
    """True iff the point admits a full basis of log-free local solutions."""
    loc = Location.parse(point)
    exps = indicial_exponents(op, loc)
    if len(set(exps)) < len(exps):
        return False
    if any(e.denominator != 1 for e in exps):
        raise DomainError("apparent_check needs integer exponents")
    if loc.kind == "algebraic":
        raise DomainError("apparent_check supports rational points and infinity")
    local = local_theta_form(op, loc)
    return _log_free_dimension(local, [int(e) for e in exps]) == len(exps)


def _log_free_dimension(local: DiffOperator, exps: list[int]) -> int:
    xf = local.x_form
    low = min(xf)
    Q = {m - low: P for m, P in xf.items()}
    e0, emax = exps[0], exps[-1]
    nfree = 0
    coeffs: dict[int, list[Fraction]] = {}
    constraints: list[list[Fraction]] = []
    nparams = len(exps)
    for n in range(e0, emax + 1):
        rhs = [Fraction(0)] * nparams
        for m, P in Q.items():
            if m == 0 or n - m < e0:
                continue
            c = coeffs[n - m]
            w = poly_eval(P, Fraction(n - m))
            if w:
                rhs = [r - w * a for r, a in zip(rhs, c)]
        q0 = poly_eval(Q[0], Fraction(n))
        if q0 == 0:
            if any(rhs):
                constraints.append(rhs)
            vec = [Fraction(0)] * nparams
            vec[nfree] = Fraction(1)
            nfree += 1
            coeffs[n] = vec
        else:
            coeffs[n] = [r / q0 for r in rhs]
    return nfree - _rank(constraints)


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def riemann_p_symbol(op: DiffOperator) -> list[SingularPoint]:
    out = []
    for loc in singular_points(op):
        exps = indicial_exponents(op, loc)
        mum = len(set(exps)) == 1
        try:
            app = apparent_check(op, loc) if loc.kind != "algebraic" else False
        except DomainError:
            app = False
        out.append(SingularPoint(loc, exps, app, mum))
    return out


# ---------------------------------------------------------------------------
# Frobenius bases at MUM points
# ---------------------------------------------------------------------------

@dataclass
class FrobeniusBasis:
    center: Location
    exponent: Fraction
    solutions: tuple[LogSeries, ...]
    regular_parts: tuple[Series, ...]
    scale: Fraction = Fraction(1)
    operator: DiffOperator | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.regular_parts[0].order

    @property
    def var(self) -> str:
        return self.regular_parts[0].var

    def to_json(self) -> dict:
        return {"center": self.center.label(), "exponent": str(self.exponent),
                "scale": str(self.scale),
                "solutions": [s.to_json() for s in self.solutions]}


def _eps_mul(a, b):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(4)]


def _eps_inv(a):
    inv0 = 1 / a[0]
    out = [inv0]
    for k in range(1, 4):
        out.append(-inv0 * sum(a[i] * out[k - i] for i in range(1, k + 1)))
    return out


def frobenius_basis(op: DiffOperator, center="0", order: int = 20, scale=1) -> FrobeniusBasis:
    """w_k = sum_j binom(k,j) r_j log(scale*v)^(k-j), k = 0..3, at a MUM point.

    r_0 = w_0 has leading coefficient 1 at v^e (e the local exponent) and
    r_j/w_0 has no constant term for j >= 1.
    """
    if order < 4:
        raise OrderTooSmall("Frobenius bases need truncation order >= 4")
    if op.order != 4:
        raise DomainError("frobenius_basis handles order-4 operators")
    loc = Location.parse(center)
    if loc.kind == "algebraic":
        raise NotMUM("MUM centers must be 0 or infinity")
    if loc.kind == "rational" and loc.value != 0:
        raise NotMUM(f"{loc.label()} is not a supported MUM center")
    local = op.normalized() if loc.kind == "rational" else transform_infinity(op)
    var = local.var
    xf = local.x_form
    Q0 = xf[0]
    roots = poly_rational_roots(Q0)
    if len(roots) != 1 or poly_root_multiplicity(Q0, poly([-roots[0], 1])) != 4:
        raise NotMUM(f"{loc.label()} does not have four equal exponents")
    e = roots[0]
    if e.denominator != 1 or e < 0:
        raise NotMUM("the MUM exponent must be a nonnegative integer")
    e = int(e)
    nterms = order - e
    cs = [[Fraction(1), Fraction(0), Fraction(0), Fraction(0)]]
    for n in range(1, nterms + 1):
        rhs = [Fraction(0)] * 4
        for m, P in xf.items():
            if m == 0 or m > n:
                continue
            pe = poly_shift(P, Fraction(n - m + e))[:4]
            pe = list(pe) + [Fraction(0)] * (4 - len(pe))
            prod = _eps_mul(pe, cs[n - m])
            rhs = [r - p for r, p in zip(rhs, prod)]
        q0 = poly_shift(Q0, Fraction(n + e))[:4]
        q0 = list(q0) + [Fraction(0)] * (4 - len(q0))
        cs.append(_eps_mul(rhs, _eps_inv(q0)))
    regs = []
    for j in range(4):
        coeffs = [Fraction(0)] * e + [factorial(j) * c[j] for c in cs]
        regs.append(Series(coeffs, var, order))
    sols = []
    for k in range(4):
        parts = [regs[k - i] * comb(k, i) for i in range(k + 1)]
        sols.append(LogSeries(parts, scale, var))
    return FrobeniusBasis(loc, Fraction(e), tuple(sols), tuple(regs), rational(scale), local)


def annihilation_residual(op: DiffOperator, f) -> LogSeries:
    """op(f); in theta form every coefficient up to the truncation order is final."""
    return op.apply(f)
