"""Command-line front end: ``triinterp <subcommand> [flags]``.

Exit status is 0 on success, 2 on invalid input and 1 when a numerical
routine fails (for example CG not converging).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import norms
from .bconst import b_poly_lower, b_sample_lower, csv_row
from .experiments import (FIELD_NAMES, FamilySpec, error_and_norm, named_field, predicted_bounds,
                          squeeze_sweep, sweep_rate)
from .fem import CGConvergenceError, convergence_study
from .geometry import Triangle, metrics

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class ReportError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v if math.isfinite(v) else "null"
    if v is None:
        return "null"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def render_report(rows, fmt: str = "csv") -> str:
    """Text of a report; floats carry 17 significant digits, keys keep row order."""
    rows = [rows] if isinstance(rows, dict) else list(rows)
    if not rows:
        raise ReportError("no rows to write")
    if fmt == "csv":
        keys = list(rows[0])
        lines = [",".join(keys)] + [",".join(_fmt(r[k]) for k in keys) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        body = _json_value(rows[0]) if len(rows) == 1 else \
            "[\n" + ",\n".join("  " + _json_value(r) for r in rows) + "\n]"
        return body + "\n"
    raise ReportError(f"unknown format {fmt!r}")


def write_report(rows, path=None, fmt: str = "csv") -> None:
    """Write to ``path``, or to stdout when ``path`` is None or '-'."""
    text = render_report(rows, fmt)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def _p_value(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid p: {text!r}")
    if not p >= 1:
        raise argparse.ArgumentTypeError("p must be >= 1 (or 'inf')")
    return p


def _add_triangle(sp) -> None:
    sp.add_argument("coords", type=float, nargs=6, metavar="X",
                    help="vertex coordinates x1 y1 x2 y2 x3 y3; any orientation, must not be collinear")


def _add_output(sp) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default csv)")
    sp.add_argument("--out", default=None, help="output file; stdout if omitted")


def _add_orders(sp, k_default: int = 1, m_default: int = 1) -> None:
    sp.add_argument("--k", type=int, default=k_default,
                    help=f"interpolation degree, 1..5; the error is measured against |v|_(k+1) (default {k_default})")
    sp.add_argument("--m", type=int, default=m_default,
                    help=f"order of the error seminorm, 0..k (default {m_default})")
    sp.add_argument("--p", type=_p_value, default=2.0,
                    help="Lebesgue exponent in [1, inf]; p = 2 admits the exact eigenvalue route (default 2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="triinterp", description=(
        "Lagrange interpolation error on triangles: geometry, error constants, rate sweeps and a P1 "
        "demonstrator. The circumradius of a triangle, not its smallest angle, governs the error."))
    ap.add_argument("--quad-bump", type=int, default=None,
                    help="extra quadrature exactness added to every automatically chosen rule "
                         f"(default 2, or ${norms.QUAD_BUMP_ENV})")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("metrics", help="edge lengths, area, circumradius, inscribed diameter and angles")
    _add_triangle(sp)
    _add_output(sp)

    sp = sub.add_parser("interp-error", help="|v - I v|_(m,p) on one triangle together with the three bound factors")
    _add_triangle(sp)
    _add_orders(sp)
    sp.add_argument("--field", choices=FIELD_NAMES, default="x2",
                    help="test function v; x2 saturates the circumradius rate (default x2)")
    _add_output(sp)

    sp = sub.add_parser("bconst", help="lower bound for the best interpolation error constant on a triangle")
    _add_triangle(sp)
    _add_orders(sp)
    sp.add_argument("--samples", type=int, default=2000, help="random directions for p != 2 (default 2000)")
    sp.add_argument("--seed", type=int, default=0, help="random seed for the p != 2 search (default 0)")
    sp.add_argument("--extra-degree", type=int, default=0,
                    help="enlarge the p = 2 trial space by this many polynomial degrees (default 0)")
    _add_output(sp)

    sp = sub.add_parser("family", help="rate sweep on triangles (0,0), (h,0), (h^alpha, h^beta)")
    sp.add_argument("--alpha", type=float, default=1.5, help="apex abscissa exponent, > 1 (default 1.5)")
    sp.add_argument("--beta", type=float, default=2.2,
                    help="apex height exponent, alpha < beta < 1 + alpha; beta >= 2 defeats the "
                         "inscribed-circle estimate but not the circumradius one (default 2.2)")
    _add_orders(sp)
    sp.add_argument("--field", choices=FIELD_NAMES, default="x2", help="test function v (default x2)")
    sp.add_argument("--hmax", type=float, default=2.0 ** -3, help="coarsest h (default 2^-3)")
    sp.add_argument("--hmin", type=float, default=2.0 ** -10,
                    help="h is halved from hmax while it stays >= hmin (default 2^-10)")
    sp.add_argument("--drop", type=int, default=2, help="coarsest points left out of the rate fit (default 2)")
    sp.add_argument("--out", default=None, help="CSV file for the per-h rows; the JSON summary goes to stdout")

    sp = sub.add_parser("squeeze", help="error constant on right triangles (0,0), (1,0), (0,alpha)")
    sp.add_argument("--alphas", type=_float_list, default=[1.0, 0.5, 0.1, 0.01],
                    help="comma-separated alpha values in (0, 1] (default 1,0.5,0.1,0.01)")
    _add_orders(sp)
    sp.add_argument("--samples", type=int, default=2000, help="random directions for p != 2 (default 2000)")
    sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    sp.add_argument("--extra-degree", type=int, default=0, help="trial-space enlargement for p = 2 (default 0)")
    _add_output(sp)

    sp = sub.add_parser("fem", help="P1 Poisson convergence on criss-cross meshes with rows of height ~ a^q")
    sp.add_argument("--q", type=float, default=1.2,
                    help="aspect exponent >= 1; max circumradius ~ a^(2-q) tends to 0 only for q < 2 (default 1.2)")
    sp.add_argument("--n", type=_int_list, default=[4, 8, 16, 32],
                    help="comma-separated column counts, increasing (default 4,8,16,32)")
    sp.add_argument("--no-solve", action="store_true", help="report the interpolation error only")
    sp.add_argument("--tol", type=float, default=1e-10, help="CG relative residual tolerance (default 1e-10)")
    _add_output(sp)
    return ap


def _triangle(args) -> Triangle:
    return Triangle.from_coords(args.coords)


def _run_metrics(args) -> None:
    write_report(metrics(_triangle(args)).as_row(), args.out, args.format)


def _run_interp_error(args) -> None:
    T = _triangle(args)
    v = named_field(args.field)
    err, norm = error_and_norm(v, args.k, args.m, args.p, T)
    met = metrics(T)
    row = {"field": args.field, "k": args.k, "m": args.m, "p": args.p, "hK": met.hK, "R": met.R,
           "rho": met.rho, "theta_max": met.theta_max, "error": err, "seminorm_k1": norm,
           "ratio": err / norm if norm > 0 else err, **predicted_bounds(T, args.k, args.m)}
    write_report(row, args.out, args.format)


def _run_bconst(args) -> None:
    T = _triangle(args)
    if args.p == 2:
        est = b_poly_lower(args.m, args.k, T, args.extra_degree)
    else:
        est = b_sample_lower(args.m, args.k, args.p, T, samples=args.samples, seed=args.seed)
    write_report({**csv_row(est, T), "method": est.method}, args.out, args.format)


def _run_family(args) -> None:
    if not 0 < args.hmin <= args.hmax <= 1:
        raise ValueError("need 0 < hmin <= hmax <= 1")
    hs = []
    h = args.hmax
    while h >= args.hmin * (1 - 1e-12):
        hs.append(h)
        h /= 2
    spec = FamilySpec("alpha-beta", args.alpha, args.beta, hs=tuple(hs))
    res = sweep_rate(spec, named_field(args.field), args.k, args.m, args.p, drop=args.drop)
    if args.out:
        write_report(res.rows, args.out, "csv")
    write_report(res.summary, None, "json")


def _run_squeeze(args) -> None:
    rows = squeeze_sweep(args.alphas, args.k, args.m, args.p, samples=args.samples, seed=args.seed,
                         extra_degree=args.extra_degree)
    write_report(rows, args.out, args.format)


def _run_fem(args) -> None:
    study = convergence_study(args.q, args.n, solve=not args.no_solve, tol=args.tol)
    write_report(study.rows, args.out, args.format)
    sys.stderr.write("fitted slopes vs a: " + ", ".join(f"{k}={v:.4f}" for k, v in study.rates.items()) + "\n")


_HANDLERS = {"metrics": _run_metrics, "interp-error": _run_interp_error, "bconst": _run_bconst,
             "family": _run_family, "squeeze": _run_squeeze, "fem": _run_fem}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.quad_bump is not None:
        if args.quad_bump < 0:
            sys.stderr.write("triinterp: --quad-bump must be >= 0\n")
            return EXIT_USAGE
        os.environ[norms.QUAD_BUMP_ENV] = str(args.quad_bump)
    try:
        _HANDLERS[args.command](args)
    except (CGConvergenceError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        sys.stderr.write(f"triinterp: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"triinterp: {exc}\n")
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


__all__ = ["dispatch", "main", "write_report", "render_report", "build_parser", "ReportError"]

if __name__ == "__main__":  # pragma: no cover
    main()
