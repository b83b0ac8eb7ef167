"""Gopakumar-Vafa resummation between Gromov-Witten and BPS invariants.

    sum_g N_g(d) lam^(2g-2) = sum_{k|d} sum_h n_h(d/k) (1/k) (2 sin(k lam/2))^(2h-2)

Degrees are positive ints (one-parameter models) or tuples of nonnegative
ints (multi-degree classes, where k runs over divisors of the gcd).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, gcd
from pathlib import Path
from typing import Iterable

from .errors import IncompleteTable, IntegralityFailure
from .exactmath import Series

Degree = int | tuple


# ---------------------------------------------------------------------------
# lambda expansion
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _sinc_power(h: int, mmax: int) -> tuple[Fraction, ...]:
    """Coefficients s_m of (sin u / u)^(2h-2) = sum_m s_m u^(2m), m <= mmax."""
    sinc = Series([Fraction((-1) ** m, factorial(2 * m + 1)) for m in range(mmax + 1)], "w")
    p = 2 * h - 2
    out = sinc ** p if p >= 0 else sinc.inverse() ** (-p)
    return out.coeffs


@lru_cache(maxsize=None)
def sine_laurent(h: int, k: int, gmax: int) -> dict[int, Fraction]:
    """Laurent coefficients of (1/k)(2 sin(k lam/2))^(2h-2), keyed by lambda exponent.

    Only exponents 2g-2 with g <= gmax are returned.
    """
    if gmax < h:
        return {}
    s = _sinc_power(h, gmax - h)
    out = {}
    for m in range(gmax - h + 1):
        # 2 sin(k lam/2) = k lam * sinc(u), u = k lam / 2
        out[2 * (h + m) - 2] = s[m] * Fraction(k) ** (2 * h - 3 + 2 * m) / Fraction(4) ** m
    return out


def _divisors(n: int) -> list[int]:
    return [k for k in range(1, n + 1) if n % k == 0]


def _deg_gcd(d: Degree) -> int:
    if isinstance(d, tuple):
        g = 0
        for a in d:
            g = gcd(g, a)
        return g
    return d


def _deg_div(d: Degree, k: int) -> Degree:
    return tuple(a // k for a in d) if isinstance(d, tuple) else d // k


def dependencies(g: int, d: Degree) -> list[tuple[int, Degree]]:
    """Cells (h, d/k) entering N_g(d) or, equivalently, n_g(d)."""
    return [(h, _deg_div(d, k)) for k in _divisors(_deg_gcd(d)) for h in range(g + 1)]


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass
class _Table:
    label: str
    entries: dict = field(default_factory=dict)   # (g, degree) -> value
    sources: dict = field(default_factory=dict)   # (g, degree) -> provenance string
    kind = "table"

    def __getitem__(self, key):
        try:
            return self.entries[key]
        except KeyError:
            raise IncompleteTable(f"{self.label}: no entry for g={key[0]}, degree={key[1]}") from None

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def cells(self) -> list:
        return sorted(self.entries, key=lambda c: (c[0], c[1] if isinstance(c[1], tuple) else (c[1],)))

    def genera(self) -> list[int]:
        return sorted({g for g, _ in self.entries})

    def degrees(self, g: int | None = None) -> list:
        return sorted({d for h, d in self.entries if g is None or h == g},
                      key=lambda d: d if isinstance(d, tuple) else (d,))

    def closed_cells(self) -> list:
        """Cells whose conversion only needs entries present in this table."""
        return [c for c in self.cells() if all(dep in self.entries for dep in dependencies(*c))]

    def merged(self, other: "_Table") -> "_Table":
        out = type(self)(self.label, dict(self.entries), dict(self.sources))
        out.entries.update(other.entries)
        out.sources.update(other.sources)
        return out


class BPSTable(_Table):
    kind = "bps"


class GWTable(_Table):
    kind = "gw"


def bps_to_gw(table: BPSTable, cells: Iterable | None = None) -> GWTable:
    cells = table.closed_cells() if cells is None else list(cells)
    out = GWTable(table.label)
    for g, d in cells:
        total = Fraction(0)
        for k in _divisors(_deg_gcd(d)):
            dk = _deg_div(d, k)
            for h in range(g + 1):
                total += table[(h, dk)] * sine_laurent(h, k, g)[2 * g - 2]
        out.entries[(g, d)] = total
    return out


def gw_to_bps(table: GWTable, cells: Iterable | None = None, require_integral: bool = True) -> BPSTable:
    """Invert the resummation; proceeds by degree then genus so every n it uses is known."""
    cells = table.closed_cells() if cells is None else list(cells)
    out = BPSTable(table.label)
    cache: dict = {}

    def bps(h, d):
        if (h, d) not in cache:
            rest = table[(h, d)]
            for k in _divisors(_deg_gcd(d)):
                dk = _deg_div(d, k)
                for hh in range(h + 1):
                    if k == 1 and hh == h:
                        continue
                    rest -= bps(hh, dk) * sine_laurent(hh, k, h)[2 * h - 2]
            cache[(h, d)] = rest
        return cache[(h, d)]

    for g, d in cells:
        v = bps(g, d)
        if require_integral and v.denominator != 1:
            raise IntegralityFailure(f"n_{g}({d}) = {v} is not an integer")
        out.entries[(g, d)] = int(v) if v.denominator == 1 else v
    return out


def round_trip_report(table: BPSTable, fills: Iterable[int] = (0, 7919)) -> dict:
    """BPS -> GW -> BPS on every cell of a published table.

    Closed cells use the table alone.  A cell whose lower-genus or
    lower-degree dependencies are not in the table is round-tripped with those
    dependencies filled by each value in `fills`; the cell must come back
    unchanged for every fill.
    """
    closed = set(table.closed_cells())
    open_cells = [c for c in table.cells() if c not in closed]
    cells = [c for c in table.cells() if c in closed]
    back = gw_to_bps(bps_to_gw(table, cells), cells)
    bad = [c for c in cells if back.entries[c] != table.entries[c]]
    for fill in fills:
        for c in open_cells:
            deps = dependencies(*c)
            t = BPSTable(table.label, {dep: table.entries.get(dep, fill) for dep in deps})
            if gw_to_bps(bps_to_gw(t, deps), deps).entries[c] != table.entries[c] and c not in bad:
                bad.append(c)
    return {"cells": len(table), "closed": len(closed), "filled": len(open_cells), "fills": list(fills),
            "failures": bad}


def gv_convert(src: _Table, direction: str, gmax: int, dmax: int):
    """Convert every cell with g <= gmax and degree <= dmax (componentwise for tuples).

    Raises IncompleteTable if a needed input cell is missing.
    """
    def in_range(d):
        return all(a <= dmax for a in d) if isinstance(d, tuple) else d <= dmax

    degs = sorted({d for _, d in src.entries if in_range(d)},
                  key=lambda d: d if isinstance(d, tuple) else (d,))
    cells = [(g, d) for d in degs for g in range(gmax + 1)]
    if direction == "bps_to_gw":
        if not isinstance(src, BPSTable):
            raise TypeError("bps_to_gw needs a BPSTable")
        return bps_to_gw(src, cells)
    if direction == "gw_to_bps":
        if not isinstance(src, GWTable):
            raise TypeError("gw_to_bps needs a GWTable")
        return gw_to_bps(src, cells)
    raise ValueError(f"unknown direction {direction!r}")


def pair_convert(src: _Table, direction: str, gmax: int, imax: int, jmax: int):
    """gv_convert for bidegrees (i, j) with k | gcd(i, j)."""
    cells = [(g, (i, j)) for i in range(imax + 1) for j in range(jmax + 1)
             if (i, j) != (0, 0) for g in range(gmax + 1)]
    if direction == "bps_to_gw":
        return bps_to_gw(src, cells)
    if direction == "gw_to_bps":
        return gw_to_bps(src, cells)
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# structural checks
# ---------------------------------------------------------------------------

def table_checks(table: _Table) -> dict:
    """Symmetry (bidegree tables) and the genus-ceiling pattern.

    The ceiling of a degree is the largest genus with a nonzero entry; it
    should not decrease with degree, and every published cell above it is 0.
    """
    report: dict = {}
    pair = any(isinstance(d, tuple) for _, d in table.entries)
    if pair:
        asym = [(g, d) for (g, d), v in table.entries.items()
                if (g, d[::-1]) in table.entries and table.entries[(g, d[::-1])] != v]
        report["symmetric"] = not asym
        report["asymmetric_cells"] = asym
    ceiling = {}
    for (g, d), v in table.entries.items():
        if v != 0:
            ceiling[d] = max(ceiling.get(d, -1), g)
    report["ceiling"] = ceiling
    if not pair:
        ds = sorted(ceiling)
        report["ceiling_monotone"] = all(ceiling[a] <= ceiling[b] for a, b in zip(ds, ds[1:]))
    return report


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

DATA_DIR = Path(__file__).resolve().parent / "data"


def _parse_value(text: str):
    q = Fraction(text)
    return int(q) if q.denominator == 1 else q


def read_table(path, kind: str = "bps", label: str | None = None) -> _Table:
    """Read ``g,d,value`` or ``g,i,j,value`` CSV; an optional ``source`` column is kept."""
    path = Path(path)
    cls = BPSTable if kind == "bps" else GWTable
    table = cls(label or path.stem)
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        pair = "i" in rows.fieldnames
        for row in rows:
            d = (int(row["i"]), int(row["j"])) if pair else int(row["d"])
            key = (int(row["g"]), d)
            table.entries[key] = _parse_value(row["value"])
            if row.get("source"):
                table.sources[key] = row["source"]
    return table


def write_table(table: _Table, path) -> None:
    pair = any(isinstance(d, tuple) for _, d in table.entries)
    head = ["g", "i", "j", "value"] if pair else ["g", "d", "value"]
    with_src = bool(table.sources)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head + (["source"] if with_src else []))
        for g, d in table.cells():
            row = [g, *d] if pair else [g, d]
            row.append(str(table.entries[(g, d)]))
            if with_src:
                row.append(table.sources.get((g, d), ""))
            w.writerow(row)


def published_table(name: str, data_dir=None) -> BPSTable:
    """Bundled fixtures: ``"X"``, ``"Y"`` or ``"X0"`` (genera 0-2 of the bidegree model)."""
    data_dir = Path(data_dir) if data_dir else DATA_DIR
    if name == "X0":
        t = BPSTable("X0")
        for g in range(3):
            t = t.merged(read_table(data_dir / f"bps_X0_g{g}.csv", "bps", "X0"))
        return t
    if name in ("X", "Y"):
        return read_table(data_dir / f"bps_{name}.csv", "bps", name)
    raise KeyError(f"no published table named {name!r}")
