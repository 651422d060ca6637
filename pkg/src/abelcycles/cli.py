"""Command-line entry point: ``python -m abelcycles <command>``.

Commands
--------
constants   closed-form constants and model zeros
abelian     periods and Abelian integrals on an h grid
psi         Psi(h) and J(h) scan
zeros       zero sequence of J
simulate    return-map experiments of the 4D system
orbit       sampled oval (t, x1, x2)
verify      acceptance suite

Exit codes: 0 success, 1 failed criterion, 2 usage or domain error,
3 numerical-capability limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from . import acceptance, elliptic, genabel, odesim, specfun
from .errors import AbelCyclesError, DomainError, PrecisionError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


def fmt(x) -> str:
    """Full-precision decimal text for CSV cells."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def emit(rows: list[dict], fmt_name: str, out) -> None:
    """Write rows as CSV (17 significant digits) or as a JSON list with the same fields."""
    if fmt_name == "json":
        json.dump(_jsonable(rows), out, indent=2, sort_keys=False)
        out.write("\n")
        return
    if not rows:
        return
    fields = list(rows[0].keys())
    w = csv.writer(out, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([fmt(row.get(f)) for f in fields])


def h_grid(args) -> list[float]:
    if args.h is not None:
        return [float(v) for v in args.h]
    if args.hmin is None or args.hmax is None:
        raise DomainError("give --h values or both --hmin and --hmax")
    if args.hmin <= 0 or args.hmax < args.hmin:
        raise DomainError("need 0 < hmin <= hmax")
    if args.points < 1:
        raise DomainError("--points must be at least 1")
    if args.points == 1:
        return [args.hmin]
    if args.log:
        grid = np.geomspace(args.hmin, args.hmax, args.points)
    else:
        grid = np.linspace(args.hmin, args.hmax, args.points)
    return [elliptic.clamp_level(h) for h in grid]


def ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Map in input order, over a process pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _constants(args) -> specfun.PaperConstants:
    return acceptance.active_constants(args.variant)


# ---------------------------------------------------------------------------
# row builders (module level so process pools can pickle them)


def abelian_row(h: float) -> dict:
    try:
        t_seg, e_seg = elliptic.period_with_error(h, "segment")
        t_ray, e_ray = elliptic.period_with_error(h, "unbounded")
        p = elliptic.abelian_pair(h)
        return {
            "h": h, "T": t_seg, "T_unbounded": t_ray, "I0": p.i0, "I1": p.i1, "I0_minus_I1": p.loop_integral,
            "representation_diff": abs(t_seg - t_ray), "quad_error": max(p.error, e_seg, e_ray), "error": "",
        }
    except AbelCyclesError as exc:
        return {"h": h, "T": math.nan, "T_unbounded": math.nan, "I0": math.nan, "I1": math.nan, "I0_minus_I1": math.nan,
                "representation_diff": math.nan, "quad_error": math.nan, "error": str(exc)}


def psi_row(task: tuple[float, complex, complex]) -> dict:
    h, kappa, a = task
    try:
        r = genabel.j_integral(h, kappa, a, crosscheck=False)
        return {
            "h": h, "T": r.t_gamma, "I0": r.i0, "I1": r.i1, "psi_re": r.psi_gamma.real, "psi_im": r.psi_gamma.imag,
            "J": r.j_value, "J_direct": r.j_direct, "crosscheck_error": r.crosscheck_error,
            "psi_error": r.psi_error, "quad_error": r.quad_error, "n": r.n, "error": "",
        }
    except AbelCyclesError as exc:
        nan = math.nan
        return {"h": h, "T": nan, "I0": nan, "I1": nan, "psi_re": nan, "psi_im": nan, "J": nan, "J_direct": nan,
                "crosscheck_error": nan, "psi_error": nan, "quad_error": nan, "n": 0, "error": str(exc)}


def simulate_row(task: tuple[float, odesim.SystemParams, int]) -> dict:
    h, p, warmup = task
    try:
        rec = odesim.section_return(h, p, warmup)
        j = genabel.j_value(rec.h_in, p.kappa, p.a)
        ratio = rec.delta_h / p.eps if p.eps > 0 else math.nan
        return {**rec.as_dict(), "delta_h_over_eps": ratio, "J": j,
                "abs_error": abs(ratio - j) if p.eps > 0 else math.nan, "error": ""}
    except AbelCyclesError as exc:
        nan = math.nan
        return {"h_start": h, "h_in": nan, "h_out": nan, "delta_h": nan, "return_time": nan,
                "transient_iterations": warmup, "delta_h_over_eps": nan, "J": nan, "abs_error": nan, "error": str(exc)}


# ---------------------------------------------------------------------------
# commands


def cmd_constants(args, out) -> int:
    c = _constants(args)
    ident = abs(c.kappa - 1j * (4.0 * specfun.SQRT3 + c.a * c.c0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = genabel.zero_sequence(c, 5)
    record = {
        **c.as_dict(),
        "kappa_identity_residual": ident,
        "kappa_identity": "PASS" if ident < 1e-12 else "FAIL",
        "leading_coefficient": c.leading_coefficient,
        "model_zeros": [z.as_dict() for z in zeros],
    }
    if args.format == "json":
        emit([record], "json", out)
        return EXIT_OK

    def cplx(z: complex) -> str:
        return f"{z.real:.12f} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.12f}i"

    print(f"constants: {c.variant}", file=out)
    print(f"a      = {cplx(c.a)}", file=out)
    print(f"kappa  = {cplx(c.kappa)}   (~ {c.kappa.real:.2f} {'+' if c.kappa.imag >= 0 else '-'} {abs(c.kappa.imag):.2f}i)", file=out)
    print(f"C0     = {cplx(c.c0)}", file=out)
    print(f"C1     = {cplx(c.c1)}", file=out)
    print(f"R      = {c.R:.12g}", file=out)
    print(f"alpha0 = {c.alpha0:.12g}", file=out)
    print(f"kappa identity |kappa - i(4 sqrt3 + a C0)| = {ident:.3e}  {record['kappa_identity']}", file=out)
    for z in zeros:
        status = f"{z.h:.12g}" if z.source is genabel.ZeroSource.REFINED else "-"
        print(f"h_{z.index} model = {z.h_model:.12g}  refined = {status}  [{z.source.value}]", file=out)
    return EXIT_OK


def cmd_abelian(args, out) -> int:
    rows = ordered_map(abelian_row, h_grid(args), args.workers)
    emit(rows, args.format, out)
    return EXIT_OK


def cmd_psi(args, out) -> int:
    c = _constants(args)
    rows = ordered_map(psi_row, [(h, c.kappa, c.a) for h in h_grid(args)], args.workers)
    emit(rows, args.format, out)
    return EXIT_OK


def cmd_zeros(args, out) -> int:
    c = _constants(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records = genabel.zero_sequence(c, args.n)
    if args.format == "json":
        emit([r.as_dict() for r in records], "json", out)
    else:
        emit([{k: v for k, v in r.as_dict().items() if k != "bracket"} for r in records], "csv", out)
    if args.refined and any(r.source is genabel.ZeroSource.MODEL_ONLY for r in records):
        print(f"requested zeros below the refinement floor h = {genabel.REFINE_FLOOR:g}", file=sys.stderr)
        return EXIT_LIMIT
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    c = _constants(args)
    p = odesim.SystemParams.from_constants(c, args.eps)
    if args.trajectory:
        h = h_grid(args)[0]
        traj = odesim.integrate_trajectory(odesim.surface_start(h, p), args.t_end, p, args.tol, keep_dense=False)
        rows = [{"t": t, "x1": u[0], "x2": u[1], "y_re": u[2], "y_im": u[3], "dH": u[4]} for t, u in zip(traj.t, traj.states)]
        emit(rows, args.format, out)
        return EXIT_OK
    rows = ordered_map(simulate_row, [(h, p, args.warmup) for h in h_grid(args)], args.workers)
    emit(rows, args.format, out)
    return EXIT_OK


def cmd_orbit(args, out) -> int:
    orbit = elliptic.orbit_sample(args.h, args.n, args.anchor)
    rows = [{"t": t, "x1": x1, "x2": x2} for t, x1, x2 in orbit.samples]
    emit(rows, args.format, out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    def progress(res: acceptance.CriterionResult) -> None:
        if args.format == "json":
            return
        print(res.summary(), file=out)
        for chk in res.checks:
            print(f"         {chk.line()}", file=out)
        if res.note:
            print(f"         {res.note}", file=out)
        out.flush()

    level = "full" if args.full else "fast"
    results = acceptance.run_criteria(level, companions=not args.no_companions, progress=progress)
    ok = acceptance.stated_passed(results)
    failed = [r.cid for r in results if not r.passed and not r.companion]
    if args.format == "json":
        emit([{"level": level, "passed": ok, "failed": failed, "criteria": [r.as_dict() for r in results]}], "json", out)
    else:
        print(f"level {level}: {'all criteria passed' if ok else 'FAILED criteria: ' + ', '.join(failed)}", file=out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h", type=float, nargs="+", help="explicit energy levels")
    p.add_argument("--hmin", type=float)
    p.add_argument("--hmax", type=float)
    p.add_argument("--points", type=int, default=20)
    spacing = p.add_mutually_exclusive_group()
    spacing.add_argument("--log", action="store_true", help="log-spaced grid")
    spacing.add_argument("--linear", action="store_true", help="linearly spaced grid (default)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--json", dest="format", action="store_const", const="json", help="same as --format json")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--variant", choices=("published", "corrected"), default="published", help="constant set")
    common.add_argument("--workers", type=int, default=1, help="process pool size for scans")

    parser = argparse.ArgumentParser(prog="abelcycles", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", parents=[common], help="closed-form constants and model zeros").set_defaults(func=cmd_constants)

    p = sub.add_parser("abelian", parents=[common], help="periods and Abelian integrals")
    _add_grid(p)
    p.set_defaults(func=cmd_abelian)

    p = sub.add_parser("psi", parents=[common], help="Psi(h) and J(h) scan")
    _add_grid(p)
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("zeros", parents=[common], help="zero sequence of J")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--refined", action="store_true", help="exit 3 if a requested zero is below the refinement floor")
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("simulate", parents=[common], help="return-map experiments")
    _add_grid(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--trajectory", action="store_true", help="dump the trajectory from the first level instead")
    p.add_argument("--t-end", type=float, default=20.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("orbit", parents=[common], help="sampled oval (t, x1, x2)")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--anchor", choices=("middle", "left"), default="middle")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("verify", parents=[common], help="acceptance suite")
    level = p.add_mutually_exclusive_group()
    level.add_argument("--fast", action="store_true", help="default level")
    level.add_argument("--full", action="store_true", help="include limit-cycle bracketing")
    p.add_argument("--no-companions", action="store_true", help="skip the companion checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(None if argv is None else list(argv))
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except PrecisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (AbelCyclesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
