"""Command-line front end: solve, sweep, lambda-sweep, verify, plot.

Exit codes: 0 success, 1 configuration/parse error, 2 solver failure,
3 a verification verdict came out "violated".
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import (PANEL_LAMBDAS, ProfileClass, TooFewPoints, classify_profile, lambda_sweep,
                       m_infinity, oracle_agreement, run_sweep, verdicts)
from .grid import integrate
from .output import MalformedCSV, panels_svg, read_csv, sweep_svg, write_atomic, write_csv
from .scenario import (BUILTIN_IDS, ConfigError, UnknownExample, builtin_example,
                       load_scenario_file)
from .solver import NoConvergence, Problem, SweepFailure, continuation_sweep
from .solver import residual as residual_field

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VIOLATED = 0, 1, 2, 3

SWEEP_COLUMNS = ["d", "M", "M_minus_intK", "iterations", "residual", "method"]


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _scenario(args, lam=None):
    try:
        if getattr(args, "example", None):
            return builtin_example(args.example, lam=lam)
        if getattr(args, "scenario", None):
            sc = load_scenario_file(args.scenario)
            return sc.with_lambda(lam) if lam is not None else sc
    except (ConfigError, UnknownExample, OSError, ValueError) as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    raise CLIError("give a scenario file or --example ID", EXIT_CONFIG)


def _profile(table) -> ProfileClass:
    """classify_profile, or an "unclassified" placeholder for sweeps under 5 rows."""
    try:
        return classify_profile(table)
    except TooFewPoints:
        return ProfileClass("unclassified", 0, 0, float(table.d[int(np.argmax(table.M))]))


def sweep_rows(table):
    return [[row.d, row.M, row.M_minus_intK, row.iterations, row.residual, row.method]
            for row in table.rows]


def sweep_header(table, shape: str):
    return [("scenario", table.name), ("intK", table.int_K), ("beta", table.beta),
            ("m_infinity", table.m_infinity), ("profile_shape", shape)]


def cmd_solve(args) -> int:
    if not args.d > 0:
        raise CLIError("d must be positive", EXIT_CONFIG)
    sc = _scenario(args, lam=args.lam)
    K, P, r = sc.fields()
    # same warm-start path as a sweep: every grid d below the target, then the target
    ladder = [float(v) for v in sc.d_grid() if v < args.d] + [float(args.d)]
    try:
        res = continuation_sweep(K, P, r, ladder, sc.opts)[-1]
    except SweepFailure as exc:
        raise CLIError(str(exc), EXIT_SOLVER) from exc
    F = residual_field(res.u, Problem(args.d, K, P, r))
    header = [("scenario", sc.name), ("d", float(args.d)), ("M", integrate(res.u)),
              ("intK", integrate(K)), ("iterations", res.iterations),
              ("residual_norm", res.residual_norm), ("method", res.method)]
    cols = [res.u.x, res.u.values, K.values, P.values, r.values, F.values]
    rows = [[float(v) for v in vals] for vals in zip(*cols)]
    write_csv(args.out, header, ["x", "u", "K", "P", "r", "residual"], rows)
    print(f"{sc.name}: d={args.d:g} M={integrate(res.u):.10f} intK={integrate(K):.10f} "
          f"({res.method}, {res.iterations} iterations) -> {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _scenario(args, lam=args.lam)
    try:
        table, _, _ = run_sweep(sc)
    except SweepFailure as exc:
        raise CLIError(str(exc), EXIT_SOLVER) from exc
    shape = _profile(table).shape
    write_csv(args.out, sweep_header(table, shape), SWEEP_COLUMNS, sweep_rows(table))
    if args.plot:
        write_atomic(args.plot, sweep_svg(table.d, table.M, table.int_K, table.name))
    print(f"{table.name}: {len(table.rows)} rows, intK={table.int_K:.10f}, "
          f"M_inf={table.m_infinity:.10f}, profile={shape} -> {args.out}")
    return EXIT_OK


def cmd_lambda_sweep(args) -> int:
    sc = _scenario(args)
    if not args.lambdas:
        raise CLIError("lambda list is empty", EXIT_CONFIG)
    alpha = sc.power.alpha if sc.power else 1.0
    K, P, _ = sc.fields()
    out = Path(args.out)
    try:
        tables = lambda_sweep(K, P, alpha, args.lambdas, sc.d_grid(), sc.opts, name=sc.name.split("[")[0])
    except SweepFailure as exc:
        raise CLIError(str(exc), EXIT_SOLVER) from exc
    summary = []
    panels = []
    for lam, table in tables:
        prof = _profile(table)
        write_csv(out / f"sweep_lambda_{lam:g}.csv", sweep_header(table, prof.shape),
                  SWEEP_COLUMNS, sweep_rows(table))
        summary.append([lam, m_infinity(lam, K, P), float(table.M.max()), prof.argmax_d, prof.shape])
        panels.append((f"lambda = {lam:g}", table.d, table.M, table.int_K))
        print(f"lambda={lam:g}: profile={prof.shape}, max M={table.M.max():.6f}, "
              f"M_inf={m_infinity(lam, K, P):.6f}")
    write_csv(out / "summary.csv", [("scenario", sc.name.split("[")[0]), ("intK", integrate(K))],
              ["lambda", "m_infinity", "max_M", "argmax_d", "profile_shape"], summary)
    if args.plot:
        write_atomic(args.plot, panels_svg(panels))
    return EXIT_OK


def verify_scenarios(selection: str | None, lam: float | None = None):
    if selection is None:
        out = []
        for ex in BUILTIN_IDS:
            if ex == "ex4.4":
                out += [builtin_example(ex, lam=1.0), builtin_example(ex, lam=0.0)]
            else:
                out.append(builtin_example(ex))
        return out
    return [builtin_example(selection, lam=lam)]


def run_verification(scenarios, oracle_check: bool = True):
    """Sweep each scenario and collect (reports, warnings)."""
    reports, warnings = [], []
    for sc in scenarios:
        table, results, fields = run_sweep(sc)
        reports += verdicts(sc, table, results[:2], fields)
        if oracle_check:
            for d, diff in oracle_agreement(*fields, opts=sc.opts):
                if diff > 1e-6:
                    warnings.append(f"WARNING {sc.name}: Newton and pseudo-transient states differ by "
                                    f"{diff:.2e} (relative) at d={d:g}; steady state may not be unique")
    return reports, warnings


def cmd_verify(args) -> int:
    if args.all and args.example:
        raise CLIError("use either --all or --example", EXIT_CONFIG)
    try:
        scenarios = verify_scenarios(None if args.all or not args.example else args.example, args.lam)
    except (UnknownExample, ValueError) as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    try:
        reports, warnings = run_verification(scenarios, oracle_check=not args.no_oracle)
    except (SweepFailure, NoConvergence) as exc:
        raise CLIError(str(exc), EXIT_SOLVER) from exc
    counts = {v: sum(rep.verdict == v for rep in reports)
              for v in ("confirmed", "violated", "inapplicable", "indeterminate")}
    lines = [f"# verification of {len(scenarios)} scenario(s): "
             + ", ".join(f"{k}={v}" for k, v in counts.items())]
    lines += [rep.line() for rep in reports]
    lines += warnings
    text = "\n".join(lines) + "\n"
    if args.report:
        write_atomic(args.report, text)
    sys.stdout.write(text)
    return EXIT_VIOLATED if counts["violated"] else EXIT_OK


def cmd_plot(args) -> int:
    try:
        header, columns, rows = read_csv(args.input)
        d = [float(row[columns.index("d")]) for row in rows]
        M = [float(row[columns.index("M")]) for row in rows]
        int_K = float(header["intK"])
    except (MalformedCSV, ValueError, KeyError) as exc:
        raise CLIError(f"malformed sweep CSV {args.input}: {exc}", EXIT_CONFIG) from exc
    if any(v <= 0 for v in d):
        raise CLIError("d column must be positive for a log axis", EXIT_CONFIG)
    title = header.get("scenario", Path(args.input).stem)
    if "profile_shape" in header:
        title += f" ({header['profile_shape']})"
    write_atomic(args.out, sweep_svg(d, M, int_K, title))
    return EXIT_OK


def _add_source(p, lam=False):
    p.add_argument("scenario", nargs="?", help="scenario file")
    p.add_argument("--example", choices=BUILTIN_IDS, help="built-in scenario id")
    if lam:
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="exponent of the power family r = alpha*(K/P)^lambda")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popdisp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="steady state at one d")
    _add_source(p, lam=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="M(d) over the scenario's d-grid")
    _add_source(p, lam=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="also write an SVG plot")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lambda-sweep", help="one sweep per exponent of r = alpha*(K/P)^lambda")
    _add_source(p)
    p.add_argument("--lambdas", type=float, nargs="+", default=list(PANEL_LAMBDAS))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", help="multi-panel SVG")
    p.set_defaults(func=cmd_lambda_sweep, example="ex4.4")

    p = sub.add_parser("verify", help="check theorem verdicts on built-in scenarios")
    p.add_argument("--all", action="store_true")
    p.add_argument("--example", choices=BUILTIN_IDS)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--report", help="write the report here as well as to stdout")
    p.add_argument("--no-oracle", action="store_true", help="skip the Newton/pseudo-transient cross-check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="SVG from a sweep CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "lambda-sweep" and args.scenario:
        args.example = None
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
