"""The two-parameter GKZ system behind the diagonal family.

Operators are polynomials in (x, y, theta_x, theta_y) with every monomial
written as x^a y^b theta_x^i theta_y^j.  On x^n y^m this acts by
n^i m^j x^(n+a) y^(m+b), which is all the series checks need.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import factorial
from typing import Iterable

import mpmath

from .exactmath import Series, nullspace, poly, poly_deriv, poly_gcd, poly_monic, poly_str
from .pfode import DiffOperator

# ---------------------------------------------------------------------------
# sparse multivariate polynomials: {exponent tuple: Fraction}
# ---------------------------------------------------------------------------

MPoly = dict


def mp_add(p: MPoly, q: MPoly) -> MPoly:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0) + c
        if out[e] == 0:
            del out[e]
    return out


def mp_scale(p: MPoly, c) -> MPoly:
    return {e: v * c for e, v in p.items()} if c else {}


def mp_mul(p: MPoly, q: MPoly) -> MPoly:
    out: MPoly = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def mp_pow(p: MPoly, n: int, nvars: int) -> MPoly:
    out = {(0,) * nvars: Fraction(1)}
    for _ in range(n):
        out = mp_mul(out, p)
    return out


def mp_var(i: int, nvars: int, shift=0) -> MPoly:
    e = [0] * nvars
    e[i] = 1
    out = {tuple(e): Fraction(1)}
    if shift:
        out[(0,) * nvars] = Fraction(shift)
    return out


def mp_permute(p: MPoly, perm) -> MPoly:
    return {tuple(e[perm[i]] for i in range(len(e))): c for e, c in p.items()}


# ---------------------------------------------------------------------------
# series and operators
# ---------------------------------------------------------------------------

@dataclass
class BiSeries:
    """Dense coefficients c[n][m], 0 <= n, m <= N."""

    coeffs: list
    N: int

    def __getitem__(self, nm) -> Fraction:
        n, m = nm
        if n < 0 or m < 0:
            return Fraction(0)
        return self.coeffs[n][m]

    def is_symmetric(self) -> bool:
        return all(self.coeffs[n][m] == self.coeffs[m][n] for n in range(self.N + 1) for m in range(n))

    def diagonal(self) -> Series:
        """Restriction to x = y: sum_d (sum_{n+m=d} c(n,m)) x^d, exact for d <= N."""
        return Series([sum((self.coeffs[n][d - n] for n in range(d + 1)), Fraction(0))
                       for d in range(self.N + 1)], "x")

    @classmethod
    def zero(cls, N: int) -> "BiSeries":
        return cls([[Fraction(0)] * (N + 1) for _ in range(N + 1)], N)


def double_series(N: int, power: int = 5) -> BiSeries:
    """c(n,m) = ((n+m)!)^5 / (n!^5 m!^5)."""
    if N < 0:
        raise ValueError("truncation must be >= 0")
    f = [factorial(k) for k in range(2 * N + 1)]
    return BiSeries([[Fraction(f[n + m] ** power, (f[n] * f[m]) ** power) for m in range(N + 1)]
                     for n in range(N + 1)], N)


@dataclass
class BiOperator:
    """Polynomial in (x, y, theta_x, theta_y); exponent tuples are (a, b, i, j)."""

    terms: MPoly = field(default_factory=dict)
    label: str = ""

    def apply_coeff(self, s, n: int, m: int) -> Fraction:
        """Coefficient of x^n y^m in self(s), with s indexable as s[n, m]."""
        total = Fraction(0)
        for (a, b, i, j), c in self.terms.items():
            p, q = n - a, m - b
            if p < 0 or q < 0:
                continue
            v = s[p, q]
            if v:
                total += c * p ** i * q ** j * v
        return total

    def degree_shift(self) -> int:
        return max(a + b for a, b, _, _ in self.terms)

    def to_json(self) -> dict:
        return {"label": self.label,
                "terms": [[list(e), str(c)] for e, c in sorted(self.terms.items())]}


def _theta_poly(i_coef, j_coef, const) -> MPoly:
    """i_coef theta_x + j_coef theta_y + const in the 4-variable ring."""
    out: MPoly = {}
    if i_coef:
        out[(0, 0, 1, 0)] = Fraction(i_coef)
    if j_coef:
        out[(0, 0, 0, 1)] = Fraction(j_coef)
    if const:
        out[(0, 0, 0, 0)] = Fraction(const)
    return out


def _lead_minus(lead: MPoly, var: int, shared: MPoly, power: int, label: str) -> BiOperator:
    x = {(1, 0, 0, 0) if var == 0 else (0, 1, 0, 0): Fraction(1)}
    return BiOperator(mp_add(lead, mp_scale(mp_mul(x, mp_pow(shared, power, 4)), -1)), label)


def gkz_operators(power: int = 5) -> tuple[BiOperator, BiOperator]:
    """{theta_x^5 - x(theta_x+theta_y+1)^5, theta_y^5 - y(theta_x+theta_y+1)^5}.

    `power` replaces the exponent of the shared factor (used for mutation checks).
    """
    shared = _theta_poly(1, 1, 1)
    return (_lead_minus(mp_pow(_theta_poly(1, 0, 0), 5, 4), 0, shared, power, "Dx"),
            _lead_minus(mp_pow(_theta_poly(0, 1, 0), 5, 4), 1, shared, power, "Dy"))


def chart_operators(chart: str) -> tuple[BiOperator, BiOperator]:
    """Operators in a toric chart, written in that chart's local (x_k, y_k).

    "0": the chart around (x, y) = (0, 0); "1": [1, -y1, -x1]; "2": [-y2, 1, -x2].
    Charts 1 and 2 share the same form.
    """
    if chart in ("0", "origin"):
        return gkz_operators()
    if chart in ("1", "2"):
        shared = _theta_poly(1, 1, 0)
        return (_lead_minus(mp_pow(_theta_poly(1, 0, -1), 5, 4), 0, shared, 5, f"D{chart}x"),
                _lead_minus(mp_pow(_theta_poly(0, 1, 0), 5, 4), 1, shared, 5, f"D{chart}y"))
    raise ValueError(f"unknown chart {chart!r}")


def gkz_annihilate_check(ops: Iterable[BiOperator], s: BiSeries) -> bool:
    """Every operator kills s in all coefficients of total degree <= N - 1."""
    for op in ops:
        for n in range(s.N + 1):
            for m in range(s.N - n):
                if op.apply_coeff(s, n, m) != 0:
                    return False
    return True


def diagonal_check(op: DiffOperator, s: BiSeries) -> bool:
    """op annihilates the diagonal restriction of s through order N - 5."""
    diag = s.diagonal()
    res = op.apply(diag)
    part = res.parts[0]
    upto = s.N - 5
    if upto < 0:
        raise ValueError("truncation too small for the diagonal check")
    return all(part[k] == 0 for k in range(upto + 1))


def chart_regular_dimension(chart: str, N: int) -> int:
    """Dimension of log-free power-series solutions through total degree N (exact linear algebra)."""
    ops = chart_operators(chart)
    cells = [(n, d - n) for d in range(N + 1) for n in range(d + 1)]
    index = {c: k for k, c in enumerate(cells)}
    rows = []
    for op in ops:
        for n, m in cells:
            row = [Fraction(0)] * len(cells)
            for (a, b, i, j), c in op.terms.items():
                p, q = n - a, m - b
                if p < 0 or q < 0:
                    continue
                row[index[(p, q)]] += c * p ** i * q ** j
            if any(row):
                rows.append(row)
    return len(nullspace(rows, len(cells)))


# ---------------------------------------------------------------------------
# discriminant
# ---------------------------------------------------------------------------

def dis0() -> MPoly:
    """(u+v+w)^5 - 5^4 uvw (u+v+w)^2 + 5^5 uvw (uv+vw+wu) in variables (u, v, w)."""
    u, v, w = (mp_var(i, 3) for i in range(3))
    s = mp_add(mp_add(u, v), w)
    uvw = mp_mul(mp_mul(u, v), w)
    e2 = mp_add(mp_add(mp_mul(u, v), mp_mul(v, w)), mp_mul(w, u))
    out = mp_pow(s, 5, 3)
    out = mp_add(out, mp_scale(mp_mul(uvw, mp_pow(s, 2, 3)), -5 ** 4))
    return mp_add(out, mp_scale(mp_mul(uvw, e2), 5 ** 5))


def dis0_symmetric() -> bool:
    F = dis0()
    return all(mp_permute(F, p) == F for p in permutations(range(3)))


def _restrict_diagonal(F: MPoly) -> list[Fraction]:
    """F(u, u, 1) as a univariate coefficient list in u."""
    deg = max(a + b for a, b, _ in F)
    out = [Fraction(0)] * (deg + 1)
    for (a, b, _), c in F.items():
        out[a + b] += c
    return poly(out)


@dataclass
class AlgebraicNumber:
    minpoly: tuple
    approx: complex

    def to_json(self) -> dict:
        return {"minpoly": [str(c) for c in self.minpoly], "approx": repr(self.approx)}


def diagonal_node_minpoly() -> tuple:
    """Square-free part of the singular locus of dis0 on u = v (w = 1), in x = -u, monic."""
    f = _restrict_diagonal(dis0())
    g = poly_monic(poly_gcd(f, poly_deriv(f)))
    # x = -u
    gx = poly([c * (-1) ** k for k, c in enumerate(g)])
    return poly_monic(gx)


def diagonal_nodes(dps: int = 30) -> list[AlgebraicNumber]:
    mp = diagonal_node_minpoly()
    with mpmath.workdps(dps):
        roots = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in reversed(mp)])
        roots = sorted(roots, key=lambda r: float(mpmath.re(r)))
        return [AlgebraicNumber(tuple(mp), complex(r)) for r in roots]


def same_up_to_unit(p, q) -> bool:
    return poly_monic(poly(p)) == poly_monic(poly(q))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def gkz_report(order: int = 20, chart_order: int = 8) -> list[dict]:
    """Pass/fail per check; `order` is the double-series truncation."""
    from .pfode import build_reye_operator

    s = double_series(order)
    op = build_reye_operator()
    mutated = gkz_operators(power=4)
    mp = diagonal_node_minpoly()
    nodes = diagonal_nodes()
    out = [
        ("annihilate", gkz_annihilate_check(gkz_operators(), s)),
        ("annihilate_mutation_fails", not gkz_annihilate_check(mutated, s)),
        ("series_symmetric", s.is_symmetric()),
        ("diagonal_prefix", list(s.diagonal().coeffs[:3]) == [1, 2, 34]),
        ("diagonal", diagonal_check(op, s)),
        ("chart_0", chart_regular_dimension("0", chart_order) == 1),
        ("chart_1", chart_regular_dimension("1", chart_order) == 1),
        ("chart_2", chart_regular_dimension("2", chart_order) == 1),
        ("dis0_symmetric", dis0_symmetric()),
        ("node_minpoly", same_up_to_unit(mp, [1, 11, -1])),
        ("node_count", len(nodes) == 2),
    ]
    report = [{"check": name, "status": "pass" if ok else "fail"} for name, ok in out]
    report.append({"check": "node_values", "status": "info",
                   "value": [f"{n.approx.real:.8f}" for n in nodes], "minpoly": poly_str(mp)})
    return report
