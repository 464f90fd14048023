"""Command-line entry point: ``wrcayley {solve,sweep,curves,verify}``.

Exit codes: 0 ok, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .critical import (
    lambda_cr,
    lambda_cr_anti,
    lambda_cr_prime,
    periodic_threshold,
    theta_c,
    theta_cr_anti,
)
from .model import ModelParams, UsageError, exy_residual
from .periodic import periodic_window
from .tisgm import classify_phase

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_PARALLEL_MIN_POINTS = 64


def fmt(v) -> str:
    """Fixed 17-significant-digit rendering so output is byte-stable."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else fmt(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def worker_count() -> int:
    cap = os.environ.get("WR_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError("WR_THREADS must be a positive integer")
    return n


def _axis(lo: float, hi: float, steps: int, log: bool) -> np.ndarray:
    if steps < 2:
        raise UsageError("steps must be >= 2")
    if not hi > lo:
        raise UsageError("range needs hi > lo")
    if log:
        if lo <= 0:
            raise UsageError("log scale needs a positive range")
        return np.geomspace(lo, hi, steps)
    return np.linspace(lo, hi, steps)


def _write(rows: list[dict], header: list[str], out: str | None, fmt_kind: str):
    if fmt_kind == "json":
        text = json.dumps([{h: _jsonable(r.get(h)) for h in header} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(r.get(h)) for h in header])
        text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# solve ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    p = ModelParams(args.k, args.theta, args.lam)
    rep = classify_phase(p)
    d = rep.as_dict()
    d["params"] = {"k": p.k, "theta": p.theta, "lambda": p.lam}
    d["laws"] = [{"x": bl.x, "y": bl.y, "residual": exy_residual(bl, p)} for bl in rep.solutions.all_laws()]
    d["notes"] = rep.notes
    print(json.dumps(_jsonable(d), indent=1))
    return EXIT_OK


# sweep ---------------------------------------------------------------------------

SWEEP_HEADER = ["k", "theta", "lambda", "count", "deciding_theorem", "n_solutions", "residual"]


def sweep_point(k: int, theta: float, lam: float) -> dict:
    rep = classify_phase(ModelParams(k, float(theta), float(lam)))
    return {"k": k, "theta": float(theta), "lambda": float(lam), "count": rep.count,
            "deciding_theorem": rep.deciding_theorem, "n_solutions": rep.solutions.n_solutions,
            "residual": rep.solutions.residual}


def _sweep_star(args):
    return sweep_point(*args)


def sweep_rows(k: int, thetas, lams, workers: int = 1) -> list[dict]:
    """One row per grid point, theta-major, independent of how the work is scheduled."""
    pts = [(k, float(t), float(l)) for t in thetas for l in lams]
    if workers > 1 and len(pts) >= _PARALLEL_MIN_POINTS:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_star, pts, chunksize=max(1, len(pts) // (4 * workers))))
    return [sweep_point(*pt) for pt in pts]


def cmd_sweep(args) -> int:
    thetas = _axis(args.theta_lo, args.theta_hi, args.theta_steps, False)
    lams = _axis(args.lambda_lo, args.lambda_hi, args.lambda_steps, args.scale == "log")
    if args.theta_lo < 0:
        raise UsageError("theta must be >= 0")
    rows = sweep_rows(args.k, thetas, lams, worker_count())
    _write(rows, SWEEP_HEADER, args.output, args.format)
    return EXIT_OK


# curves --------------------------------------------------------------------------

def curve_rows(k: int, regime: str, steps: int, theta_lo=None, theta_hi=None) -> tuple[list[str], list[dict]]:
    """Closed-form critical curves sampled on a theta grid, with ordering flags."""
    if k < 2:
        raise UsageError("k must be >= 2")
    if regime == "antiferro":
        lo = theta_cr_anti(k) if theta_lo is None else theta_lo
        hi = 4 * theta_cr_anti(k) if theta_hi is None else theta_hi
        # the two curves meet at theta_cr, so the left end is left open
        thetas = _axis(lo, hi, steps + 1, False)[1:]
        header = ["theta", "lambda_cr_low", "lambda_cr_high", "ordered"]
        rows = []
        for t in thetas:
            pair = lambda_cr_anti(k, float(t))
            rows.append({"theta": float(t),
                         "lambda_cr_low": pair[0] if pair else None,
                         "lambda_cr_high": pair[1] if pair else None,
                         "ordered": bool(pair and pair[0] < pair[1])})
        return header, rows
    if regime == "ferro":
        lo = 0.0 if theta_lo is None else theta_lo
        hi = theta_c(k) if theta_hi is None else theta_hi
        # the right end is the pole of lambda_cr, so it is left open
        thetas = _axis(lo, hi, steps + 1, False)[:-1]
        header = ["theta", "lambda_cr", "lambda_cr_prime", "ordered"]
        rows = []
        for t in thetas:
            lc = lambda_cr(k, float(t))
            lp = lambda_cr_prime(k, float(t)) if k >= 4 else None
            rows.append({"theta": float(t), "lambda_cr": lc, "lambda_cr_prime": lp,
                         "ordered": True if lp is None else bool(lc is not None and lp < lc)})
        return header, rows
    if regime == "periodic":
        w = periodic_window(k, 0.0)
        if w.empty:
            raise UsageError(f"periodic window is empty: needs {w.violated}")
        lo = 0.0 if theta_lo is None else theta_lo
        hi = periodic_threshold(k) if theta_hi is None else theta_hi
        # open interval: the window closes at the threshold
        thetas = _axis(lo, hi, steps + 2, False)[1:-1]
        header = ["theta", "lambda_minus", "lambda_plus", "s_minus", "s_plus", "ordered"]
        rows = []
        for t in thetas:
            w = periodic_window(k, float(t))
            rows.append({"theta": float(t), "lambda_minus": w.lam_minus, "lambda_plus": w.lam_plus,
                         "s_minus": w.s_minus, "s_plus": w.s_plus,
                         "ordered": bool(not w.empty and w.lam_minus < w.lam_plus)})
        return header, rows
    raise UsageError(f"unknown regime {regime!r}")


def cmd_curves(args) -> int:
    header, rows = curve_rows(args.k, args.regime, args.theta_steps, args.theta_lo, args.theta_hi)
    _write(rows, header, args.output, args.format)
    return EXIT_OK


# verify --------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.level == "quick", only=args.only)
    for r in results:
        print(r.line(), file=sys.stderr)
    report = {"level": args.level, "passed": all(r.passed for r in results),
              "checks": [r.as_dict() for r in results]}
    text = json.dumps(_jsonable(report), indent=1) + "\n"
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# parser --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wrcayley", description="Boundary laws and Gibbs measures of the Widom-Rowlinson model on Cayley trees.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="classify one parameter point and list its boundary laws")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="classify every point of a (theta, lambda) grid")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--theta-lo", type=float, required=True)
    s.add_argument("--theta-hi", type=float, required=True)
    s.add_argument("--theta-steps", type=int, required=True)
    s.add_argument("--lambda-lo", type=float, required=True)
    s.add_argument("--lambda-hi", type=float, required=True)
    s.add_argument("--lambda-steps", type=int, required=True)
    s.add_argument("--scale", choices=["linear", "log"], default="log")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("curves", help="sample the closed-form critical curves")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--regime", choices=["antiferro", "ferro", "periodic"], required=True)
    s.add_argument("--theta-steps", type=int, default=100)
    s.add_argument("--theta-lo", type=float, default=None)
    s.add_argument("--theta-hi", type=float, default=None)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_curves)

    s = sub.add_parser("verify", help="run the acceptance suite")
    s.add_argument("--level", choices=["quick", "full"], default="quick")
    s.add_argument("--only", nargs="*", default=None, help="check-name prefixes to run")
    s.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
    s.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"wrcayley: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # domain and regime errors come from bad point parameters
        print(f"wrcayley: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
