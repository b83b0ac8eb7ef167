"""Exact rational arithmetic: truncated power series, log-towers and dense polynomials.

``fractions.Fraction`` is the coefficient field throughout; it already keeps
values in lowest terms with a positive denominator.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .errors import DegenerateDivisor, DomainError, NotInvertible

Rational = Fraction
Poly = tuple  # tuple[Fraction, ...], low degree first, no trailing zeros

SCHOOLBOOK_CUTOFF = 64


def rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def rational_str(q: Fraction) -> str:
    return str(q)


# ---------------------------------------------------------------------------
# dense polynomials
# ---------------------------------------------------------------------------

def poly(coeffs: Iterable) -> Poly:
    out = [rational(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def poly_degree(p: Poly) -> int:
    return len(p) - 1


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n))


def poly_scale(p: Poly, c) -> Poly:
    return poly(c * a for a in p)


def poly_sub(p: Poly, q: Poly) -> Poly:
    return poly_add(p, poly_scale(q, -1))


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly(out)


def poly_pow(p: Poly, n: int) -> Poly:
    out: Poly = (Fraction(1),)
    for _ in range(n):
        out = poly_mul(out, p)
    return out


def poly_eval(p: Sequence, x):
    acc = 0 * x
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_deriv(p: Poly) -> Poly:
    return poly(i * p[i] for i in range(1, len(p)))


def poly_divmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    quo = [Fraction(0)] * max(len(p) - len(q) + 1, 0)
    lead = q[-1]
    for k in range(len(p) - len(q), -1, -1):
        c = r[k + len(q) - 1] / lead
        quo[k] = c
        if c:
            for j, b in enumerate(q):
                r[k + j] -= c * b
    return poly(quo), poly(r[: max(len(q) - 1, 0)])


def poly_monic(p: Poly) -> Poly:
    return poly_scale(p, 1 / p[-1]) if p else p


def poly_gcd(p: Poly, q: Poly) -> Poly:
    while q:
        p, q = q, poly_divmod(p, q)[1]
    return poly_monic(p)


def poly_shift(p: Poly, a) -> list:
    """Coefficients of p(a + t) in t. Works for exact or floating ``a``."""
    out = [0 * a] * len(p)
    for i, c in enumerate(p):
        if not c:
            continue
        apow = 1
        for k in range(i, -1, -1):
            out[k] = out[k] + c * comb(i, k) * apow
            apow = apow * a
    return out


def poly_rational_roots(p: Poly) -> list[Fraction]:
    """Distinct rational roots.

    Small coefficients: rational root theorem.  Otherwise the square-free
    part is solved numerically and each root is snapped to the nearest
    fraction with admissible denominator, then confirmed exactly.
    """
    if not p:
        raise ValueError("zero polynomial")
    from math import gcd, lcm
    den = lcm(*(c.denominator for c in p))
    ints = [int(c * den) for c in p]
    roots = []
    if ints[0] == 0:
        roots.append(Fraction(0))
        while ints and ints[0] == 0:
            ints.pop(0)
    if len(ints) <= 1:
        return roots
    content = 0
    for c in ints:
        content = gcd(content, c)
    ints = [c // content for c in ints]
    a0, an = abs(ints[0]), abs(ints[-1])
    if max(a0, an) < 10 ** 12:
        for num in _divisors(a0):
            for d in _divisors(an):
                for s in (1, -1):
                    r = Fraction(s * num, d)
                    if r not in roots and poly_eval(ints, r) == 0:
                        roots.append(r)
        return sorted(roots)
    return sorted(roots + _numeric_rational_roots(poly(ints)))


def _numeric_rational_roots(p: Poly) -> list[Fraction]:
    import mpmath

    dp = poly(i * p[i] for i in range(1, len(p)))
    g = poly_gcd(p, dp)
    sq = poly_divmod(p, g)[0] if len(g) > 1 else p
    sq = poly_scale(sq, lcm_den(sq))
    an = abs(int(sq[-1]))
    digits = max(len(str(abs(int(c)))) for c in sq)
    out = []
    with mpmath.workdps(2 * digits + 30):
        zs = mpmath.polyroots([mpmath.mpf(int(c)) for c in reversed(sq)], maxsteps=500, extraprec=4 * digits)
        for z in zs:
            if abs(mpmath.im(z)) > mpmath.mpf(10) ** (-digits):
                continue
            r = Fraction(mpmath.nstr(mpmath.re(z), 2 * digits + 20, strip_zeros=False)).limit_denominator(an)
            if poly_eval(sq, r) == 0 and r not in out:
                out.append(r)
    return out


def lcm_den(p: Poly) -> int:
    from math import lcm
    return lcm(*(c.denominator for c in p)) if p else 1


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small = [d for d in range(1, int(n ** 0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def poly_root_multiplicity(p: Poly, factor: Poly) -> int:
    m = 0
    while p:
        q, r = poly_divmod(p, factor)
        if r:
            break
        p, m = q, m + 1
    return m


def poly_str(p: Poly, var: str = "x") -> str:
    if not p:
        return "0"
    terms = []
    for i, c in enumerate(p):
        if c == 0:
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        coef = str(c)
        if mono and c == 1:
            coef = ""
        elif mono and c == -1:
            coef = "-"
        terms.append(f"{coef}{'*' if coef not in ('', '-') and mono else ''}{mono}" if mono else coef)
    return " + ".join(terms).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------

def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [[rational(a) for a in r] for r in rows]
    pivots: list[int] = []
    ncols = len(m[0]) if m else 0
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [a * inv for a in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m, pivots


def matrix_rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1]) if rows else 0


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of {v : rows . v = 0}."""
    if ncols is None:
        ncols = len(rows[0])
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][f]
        basis.append(v)
    return basis


def linsolve(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """The unique exact solution of an (over)determined system, or None."""
    n = len(rows[0])
    m, pivots = rref([list(r) + [rhs[i]] for i, r in enumerate(rows)])
    if n in pivots or len(pivots) < n:
        return None
    return [m[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------

class Series:
    """Truncated power series sum_{n<=N} c_n v^n with exact rational coefficients.

    Arithmetic results carry the smaller of the operand truncation orders.
    """

    __slots__ = ("_c", "var")

    def __init__(self, coeffs: Iterable, var: str = "x", order: int | None = None):
        c = [rational(a) for a in coeffs]
        if order is not None:
            if order < 0:
                raise ValueError("truncation order must be >= 0")
            c = (c + [Fraction(0)] * (order + 1 - len(c)))[: order + 1]
        if not c:
            raise ValueError("a series needs at least one coefficient (order >= 0)")
        self._c = tuple(c)
        self.var = var

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int, var: str = "x") -> "Series":
        return cls([value], var, order)

    @classmethod
    def variable(cls, order: int, var: str = "x") -> "Series":
        return cls([0, 1], var, order)

    @classmethod
    def from_function(cls, f: Callable[[int], object], order: int, var: str = "x") -> "Series":
        return cls((f(n) for n in range(order + 1)), var)

    # basic protocol -----------------------------------------------------
    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return self._c

    def __len__(self) -> int:
        return len(self._c)

    def __getitem__(self, n):
        return self._c[n]

    def __iter__(self):
        return iter(self._c)

    def __eq__(self, other) -> bool:
        if isinstance(other, Series):
            return self.var == other.var and self._c == other._c
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.var, self._c))

    def __repr__(self) -> str:
        return f"Series({self.var}: {self.pretty()})"

    def pretty(self, max_terms: int = 8) -> str:
        parts = [poly_str(tuple(self._c[: max_terms]), self.var)]
        return f"{parts[0]} + O({self.var}^{self.order + 1})"

    def valuation(self) -> int | None:
        for i, a in enumerate(self._c):
            if a:
                return i
        return None

    def truncate(self, order: int) -> "Series":
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return Series(self._c[: order + 1], self.var)

    def _check(self, other: "Series") -> None:
        if self.var != other.var:
            raise ValueError(f"series in different variables: {self.var} vs {other.var}")

    # ring operations ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Series):
            self._check(other)
            n = min(self.order, other.order) + 1
            return Series((self._c[i] + other._c[i] for i in range(n)), self.var)
        other = rational(other)
        return Series((self._c[0] + other,) + self._c[1:], self.var)

    __radd__ = __add__

    def __neg__(self):
        return Series((-a for a in self._c), self.var)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series):
            self._check(other)
            n = min(self.order, other.order)
            return Series(_mul_trunc(self._c[: n + 1], other._c[: n + 1], n), self.var)
        other = rational(other)
        return Series((a * other for a in self._c), self.var)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            self._check(other)
            return self * other.inverse()
        other = rational(other)
        if other == 0:
            raise DegenerateDivisor("division of a series by zero")
        return Series((a / other for a in self._c), self.var)

    def __rtruediv__(self, other):
        return self.inverse() * rational(other)

    def __pow__(self, n):
        if isinstance(n, int):
            if n < 0:
                return self.inverse() ** (-n)
            out = Series.constant(1, self.order, self.var)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        return self.power(rational(n))

    def inverse(self) -> "Series":
        c = self._c
        if c[0] == 0:
            raise DegenerateDivisor("series with zero constant term is not invertible")
        inv0 = 1 / c[0]
        out = [inv0]
        for n in range(1, len(c)):
            s = sum(c[k] * out[n - k] for k in range(1, n + 1))
            out.append(-s * inv0)
        return Series(out, self.var)

    # calculus -----------------------------------------------------------
    def derivative(self) -> "Series":
        if self.order == 0:
            return Series([0], self.var)
        return Series((n * self._c[n] for n in range(1, len(self._c))), self.var)

    def integral(self, constant=0) -> "Series":
        return Series([rational(constant)] + [self._c[n] / (n + 1) for n in range(len(self._c))], self.var)

    def theta(self) -> "Series":
        """v d/dv, same truncation order."""
        return Series((n * a for n, a in enumerate(self._c)), self.var)

    def shift_down(self, k: int) -> "Series":
        """Divide by v^k; the first k coefficients must vanish."""
        if any(self._c[:k]):
            raise DomainError(f"series is not divisible by {self.var}^{k}")
        return Series(self._c[k:], self.var)

    def shift_up(self, k: int) -> "Series":
        """Multiply by v^k, keeping the truncation order."""
        return Series(((0,) * k + self._c)[: len(self._c)], self.var)

    # composition --------------------------------------------------------
    def compose(self, inner: "Series") -> "Series":
        """self(inner) for inner with zero constant term."""
        if inner._c[0] != 0:
            raise DomainError("inner series must have zero constant term")
        n = min(self.order, inner.order)
        inner = inner.truncate(n)
        acc = Series.constant(self._c[n], n, inner.var)
        for a in reversed(self._c[:n]):
            acc = acc * inner + a
        return acc

    def revert(self) -> "Series":
        return series_reversion(self)

    def exp(self) -> "Series":
        return series_exp_log(self, "exp")

    def log(self) -> "Series":
        return series_exp_log(self, "log")

    def power(self, r: Fraction) -> "Series":
        """s^r for s with constant term 1."""
        if self._c[0] != 1:
            raise DomainError("rational powers need constant term 1")
        return (self.log() * r).exp()

    def rename(self, var: str) -> "Series":
        return Series(self._c, var)

    def evaluate(self, x):
        return poly_eval(self._c, x)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {"var": self.var, "coeffs": [str(a) for a in self._c]}

    @classmethod
    def from_json(cls, obj) -> "Series":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls((Fraction(s) for s in obj["coeffs"]), obj["var"])


def _mul_trunc(a: Sequence[Fraction], b: Sequence[Fraction], n: int) -> list[Fraction]:
    if n + 1 <= SCHOOLBOOK_CUTOFF:
        return _schoolbook(a, b, n)
    return _karatsuba_trunc(list(a), list(b))[: n + 1]


def _schoolbook(a, b, n):
    out = []
    for k in range(n + 1):
        s = Fraction(0)
        for i in range(k + 1):
            ai = a[i]
            if ai:
                bi = b[k - i]
                if bi:
                    s += ai * bi
        out.append(s)
    return out


def _karatsuba_trunc(a: list, b: list) -> list:
    # full product, caller truncates
    if len(a) <= SCHOOLBOOK_CUTOFF or len(b) <= SCHOOLBOOK_CUTOFF:
        if not a or not b:
            return []
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        out[i + j] += x * y
        return out
    m = max(len(a), len(b)) // 2
    a0, a1 = a[:m], a[m:]
    b0, b1 = b[:m], b[m:]
    z0 = _karatsuba_trunc(a0, b0)
    z2 = _karatsuba_trunc(a1, b1)
    s1 = [x + y for x, y in _zip_pad(a0, a1)]
    s2 = [x + y for x, y in _zip_pad(b0, b1)]
    z1 = _karatsuba_trunc(s1, s2)
    for i, v in enumerate(z0):
        z1[i] -= v
    for i, v in enumerate(z2):
        z1[i] -= v
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, v in enumerate(z0):
        out[i] += v
    for i, v in enumerate(z1):
        out[i + m] += v
    for i, v in enumerate(z2):
        out[i + 2 * m] += v
    return out


def _zip_pad(u, v):
    n = max(len(u), len(v))
    z = Fraction(0)
    return [((u[i] if i < len(u) else z), (v[i] if i < len(v) else z)) for i in range(n)]


def series_arith(a: Series, b: Series, op: str) -> Series:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown series operation {op!r}")


def series_reversion(s: Series) -> Series:
    """Compositional inverse r with s(r(q)) = q to the truncation order of s."""
    c = s.coeffs
    if c[0] != 0:
        raise NotInvertible("series to revert must have zero constant term")
    if s.order < 1 or c[1] == 0:
        raise NotInvertible("series to revert needs a nonzero linear coefficient")
    n = s.order
    # Lagrange inversion: r_k = [x^(k-1)] (x/s)^k / k
    h = s.shift_down(1)
    h = Series(h.coeffs, s.var).inverse()
    r = [Fraction(0)] * (n + 1)
    hk = Series.constant(1, h.order, s.var)
    for k in range(1, n + 1):
        hk = hk * h
        r[k] = hk[k - 1] / k
    return Series(r, s.var)


def series_exp_log(s: Series, op: str) -> Series:
    c = s.coeffs
    if op == "exp":
        if c[0] != 0:
            raise DomainError("exp needs a series with zero constant term")
        out = [Fraction(1)]
        for n in range(1, len(c)):
            out.append(sum(k * c[k] * out[n - k] for k in range(1, n + 1)) / n)
        return Series(out, s.var)
    if op == "log":
        if c[0] != 1:
            raise DomainError("log needs a series with constant term 1")
        if s.order == 0:
            return Series([0], s.var)
        return (s.derivative() / s.truncate(s.order - 1)).integral()
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# log towers
# ---------------------------------------------------------------------------

class LogSeries:
    """sum_k parts[k] * log(scale * v)^k, at most four parts."""

    __slots__ = ("parts", "scale", "var")

    def __init__(self, parts: Sequence[Series], scale=1, var: str | None = None):
        parts = list(parts)
        if not parts or len(parts) > 4:
            raise ValueError("a LogSeries has between 1 and 4 parts")
        var = var or parts[0].var
        order = min(p.order for p in parts)
        parts = [p.truncate(order) for p in parts]
        while len(parts) > 1 and not any(parts[-1].coeffs):
            parts.pop()
        self.parts = tuple(parts)
        self.scale = rational(scale)
        self.var = var

    @property
    def order(self) -> int:
        return self.parts[0].order

    @property
    def log_degree(self) -> int:
        return len(self.parts) - 1

    def __repr__(self) -> str:
        lg = f"log({self.scale}*{self.var})" if self.scale != 1 else f"log({self.var})"
        return " + ".join(f"({p.pretty(5)})*{lg}^{k}" for k, p in enumerate(self.parts))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogSeries):
            return NotImplemented
        return self.parts == other.parts and self.scale == other.scale

    def __add__(self, other: "LogSeries") -> "LogSeries":
        if self.scale != other.scale:
            raise ValueError("log scales differ")
        n = max(len(self.parts), len(other.parts))
        order = min(self.order, other.order)
        zero = Series.constant(0, order, self.var)
        parts = [(self.parts[k].truncate(order) if k < len(self.parts) else zero)
                 + (other.parts[k].truncate(order) if k < len(other.parts) else zero) for k in range(n)]
        return LogSeries(parts, self.scale, self.var)

    def scaled(self, c) -> "LogSeries":
        return LogSeries([p * c for p in self.parts], self.scale, self.var)

    def times_log(self, power: int = 1) -> "LogSeries":
        zero = Series.constant(0, self.order, self.var)
        return LogSeries([zero] * power + list(self.parts), self.scale, self.var)

    def theta(self) -> "LogSeries":
        """v d/dv applied termwise: theta(f L^k) = theta(f) L^k + k f L^(k-1)."""
        out = []
        n = len(self.parts)
        for k in range(n):
            term = self.parts[k].theta()
            if k + 1 < n:
                term = term + self.parts[k + 1] * (k + 1)
            out.append(term)
        return LogSeries(out, self.scale, self.var)

    def is_zero(self) -> bool:
        return all(not any(p.coeffs) for p in self.parts)

    def taylor(self, v0, m: int, ctx) -> list:
        """First m+1 Taylor coefficients at v0 (mpmath context ``ctx``), principal log."""
        lg0 = ctx.log(ctx.mpf(self.scale.numerator) / self.scale.denominator * v0)
        # log(scale*(v0+h)) = lg0 + sum_{j>=1} (-1)^(j+1) (h/v0)^j / j
        logt = [lg0] + [(-1) ** (j + 1) / (ctx.mpf(j) * v0 ** j) for j in range(1, m + 1)]
        out = [ctx.mpc(0)] * (m + 1)
        powk = [ctx.mpc(1)] + [ctx.mpc(0)] * m
        for k, part in enumerate(self.parts):
            if k:
                powk = _num_mul(powk, logt, m)
            ft = series_taylor(part, v0, m, ctx)
            prod = _num_mul(ft, powk, m)
            out = [a + b for a, b in zip(out, prod)]
        return out

    def to_json(self) -> dict:
        return {"var": self.var, "scale": str(self.scale), "parts": [p.to_json() for p in self.parts]}

    @classmethod
    def from_json(cls, obj) -> "LogSeries":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls([Series.from_json(p) for p in obj["parts"]], Fraction(obj["scale"]), obj["var"])


def _num_mul(a, b, m):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(m + 1)]


def series_taylor(s: Series, v0, m: int, ctx) -> list:
    """Taylor coefficients of the truncated polynomial s at v0, up to order m."""
    c = [ctx.mpf(a.numerator) / a.denominator if a.denominator != 1 else ctx.mpf(a.numerator)
         for a in s.coeffs]
    out = []
    # repeated synthetic division gives p(v0), p'(v0), p''(v0)/2, ...
    work = list(c)
    for _ in range(m + 1):
        acc = ctx.mpc(0)
        nxt = [ctx.mpc(0)] * max(len(work) - 1, 0)
        for i in range(len(work) - 1, -1, -1):
            acc = acc * v0 + work[i]
            if i:
                nxt[i - 1] = acc
        out.append(acc)
        work = nxt
        if not work:
            out.extend([ctx.mpc(0)] * (m + 1 - len(out)))
            break
    return out[: m + 1]
