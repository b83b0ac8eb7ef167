"""Command-line interface: ``pfmirror <subcommand> ...``.

JSON goes to stdout (or --out); a short human summary goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .config import Config
from .errors import ConfigError, DomainError, PFMirrorError


def _emit(payload, args) -> None:
    text = json.dumps(payload, indent=1, sort_keys=False)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _config(args) -> Config:
    overrides = {k: getattr(args, k, None) for k in ("prec", "order", "operator", "paths", "tables_dir")}
    if getattr(args, "op", None):
        overrides["operator"] = args.op
    if getattr(args, "tol", None) is not None:
        overrides["snap_tol"] = args.tol
    return Config.from_env(**overrides)


def _table_json(table, genus: int) -> dict:
    return {str(d): str(v) for (g, d), v in sorted(table.entries.items(), key=lambda kv: kv[0][1]) if g == genus}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_psymbol(args, cfg: Config):
    from .pfode import riemann_p_symbol
    rows = [sp.to_json() for sp in riemann_p_symbol(cfg.load_operator())]
    for r in rows:
        _note(f"{r['point']:>28s}  " + " ".join(r["exponents"]) + ("  (apparent)" if r["apparent"] else ""))
    return rows


def cmd_frobenius(args, cfg: Config):
    from .pfode import frobenius_basis
    fb = frobenius_basis(cfg.load_operator(), args.center, cfg.order, Fraction(args.scale))
    _note(f"Frobenius basis at {args.center}, order {cfg.order}, exponent {fb.exponent}")
    return fb.to_json()


def cmd_mirror_map(args, cfg: Config):
    from .mirror import SIDES, Z_SCALE, mirror_map
    from .pfode import frobenius_basis
    scale = Fraction(args.scale) if args.scale else (Z_SCALE if args.side == "z" else Fraction(1))
    fb = frobenius_basis(cfg.load_operator(), SIDES[args.side], cfg.order, scale)
    mm = mirror_map(fb, args.side)
    _note(f"mirror map on the {args.side} side, scale {scale}")
    return {"side": args.side, "scale": str(scale), "forward": mm.forward.to_json(),
            "inverse": mm.inverse.to_json(), "bracket": mm.bracket().to_json()}


def cmd_yukawa(args, cfg: Config):
    from .mirror import TOPOLOGY, reye_yukawa, yukawa_from_operator, yukawa_verify
    op = cfg.load_operator()
    C = yukawa_from_operator(op, TOPOLOGY["X"].degree)
    if args.side == "z":
        C = C.at_infinity()
    closed = reye_yukawa(1)
    ok = yukawa_verify(op, closed)
    _note(f"closed-form coupling satisfies the operator identity: {ok}")
    return {"side": args.side, "coupling": C.to_json(), "closed_form_verified": ok}


def _bps_tables(op, side: str, genus: int, D: int):
    from .mirror import genus0_bps, genus1_bcov
    if genus == 0:
        return genus0_bps(op, side, D), {}
    if genus == 1:
        g0 = genus0_bps(op, side, D)
        t1, report = genus1_bcov(op, side, None, None, D)
        return g0.merged(t1), report
    raise DomainError("only genus 0 and 1 are computed from the operator")


def cmd_bps(args, cfg: Config):
    table, report = _bps_tables(cfg.load_operator(), args.side, args.genus, args.degree)
    out = _table_json(table, args.genus)
    _note(f"n_{args.genus}(d), d <= {args.degree}, side {args.side}" + (f"; {report}" if report else ""))
    return out


def cmd_gw(args, cfg: Config):
    from .gv import bps_to_gw
    table, report = _bps_tables(cfg.load_operator(), args.side, args.genus, args.degree)
    cells = [(args.genus, d) for d in range(1, args.degree + 1)]
    _note(f"N_{args.genus}(d) and n_{args.genus}(d), d <= {args.degree}, side {args.side}")
    out = {"side": args.side, "genus": args.genus,
           "gw": _table_json(bps_to_gw(table, cells), args.genus), "bps": _table_json(table, args.genus)}
    if report:
        out["genus1"] = report
    return out


def cmd_gkz2(args, cfg: Config):
    from .gkz2 import gkz_report
    rep = gkz_report(args.gkz_order, args.chart_order)
    for r in rep:
        _note(f"{r['status'].upper():5s} {r['check']}")
    return rep


def _monodromy_ctx(cfg: Config):
    from .monodromy import MonodromyContext, load_paths
    return MonodromyContext(cfg.load_operator(), cfg.prec, load_paths(cfg.paths))


def cmd_monodromy(args, cfg: Config):
    from .monodromy import fit_integral_basis, local_monodromy
    ctx = _monodromy_ctx(cfg)
    fit = fit_integral_basis(ctx.op, cfg.prec, ctx, tol=cfg.snap_tol) if args.basis == "Pi~" else None
    res = local_monodromy(ctx.op, args.point, cfg.prec, ctx=ctx, tol=cfg.snap_tol, basis=args.basis, fit=fit)
    _note(f"monodromy around {args.point} in the {args.basis} basis, residual {res.residual:.2e}")
    out = res.to_json()
    out["prec"] = cfg.prec
    return out


def cmd_fit(args, cfg: Config):
    from .monodromy import fit_integral_basis
    ctx = _monodromy_ctx(cfg)
    fit = fit_integral_basis(ctx.op, cfg.prec, ctx, tol=cfg.snap_tol)
    _note(f"S_xz = {fit.S_xz}")
    return fit.to_json()


def cmd_verify(args, cfg: Config):
    from .verify import reproduce_all, summary
    if args.degree:
        cfg = cfg.with_degree(args.degree)
    cfg.check_doubling = args.doubling
    reports = reproduce_all(cfg, args.only)
    _note(summary(reports))
    payload = {"config": cfg.to_json(), "reports": [r.to_json() for r in reports]}
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=1) + "\n")
    args.exit_code = 0 if all(r.ok for r in reports) else 1
    return payload


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfmirror", description="Picard-Fuchs periods, mirror maps and monodromy")
    sub = p.add_subparsers(dest="command", metavar="{psymbol,frobenius,mirror-map,yukawa,gw,bps,gkz2,"
                                                   "monodromy,fit,verify}")

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--op", help="operator JSON (default: bundled diagonal-family operator)")
        s.add_argument("--out", help="write JSON here instead of stdout")
        s.add_argument("--prec", type=int, help="working precision in bits (env PFMIRROR_PREC)")
        s.add_argument("--order", type=int, help="series truncation order")
        s.set_defaults(func=fn)
        return s

    add("psymbol", cmd_psymbol, "Riemann P-symbol of the operator")
    s = add("frobenius", cmd_frobenius, "Frobenius basis at a MUM point")
    s.add_argument("--center", default="0")
    s.add_argument("--scale", default="1")
    s = add("mirror-map", cmd_mirror_map, "mirror map at x = 0 or z = 0")
    s.add_argument("--side", choices=("x", "z"), default="x")
    s.add_argument("--scale")
    s = add("yukawa", cmd_yukawa, "Yukawa coupling derived from the operator")
    s.add_argument("--side", choices=("x", "z"), default="x")
    for name, fn in (("gw", cmd_gw), ("bps", cmd_bps)):
        s = add(name, fn, f"{name.upper()} invariants")
        s.add_argument("--side", choices=("x", "z"), default="x")
        s.add_argument("--genus", type=int, default=0)
        s.add_argument("--degree", type=int, default=10)
    s = add("gkz2", cmd_gkz2, "two-parameter GKZ checks")
    s.add_argument("action", choices=("verify",))
    s.add_argument("--gkz-order", dest="gkz_order", type=int, default=20)
    s.add_argument("--chart-order", dest="chart_order", type=int, default=8)
    for name, fn in (("monodromy", cmd_monodromy), ("fit", cmd_fit)):
        s = add(name, fn, "local monodromy" if name == "monodromy" else "integral basis fit and S_xz")
        s.add_argument("--paths", help="path fixture JSON")
        s.add_argument("--tol", type=float, help="integer snap tolerance")
        if name == "monodromy":
            s.add_argument("--point", default="0")
            s.add_argument("--basis", choices=("Pi", "Pi~"), default="Pi")
    s = add("verify", cmd_verify, "reproduce every published number")
    s.add_argument("--only", action="append", help="run only this check id (repeatable)")
    s.add_argument("--degree", type=int, help="cap genus-0/1 comparisons at this degree")
    s.add_argument("--report", help="write the report JSON here")
    s.add_argument("--doubling", action="store_true", help="also rerun monodromy at twice the precision")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = _config(args)
        payload = args.func(args, cfg)
    except (PFMirrorError, ConfigError) as exc:
        print(json.dumps(exc.to_json()))
        _note(f"error: {exc}")
        return 1
    except KeyError as exc:
        print(json.dumps({"error": "key_error", "message": str(exc)}))
        return 1
    _emit(payload, args)
    return getattr(args, "exit_code", 0)


def dispatch(argv: list[str]) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
