"""Main entry point for the kef tool."""

import argparse
import json
import logging
import math
import sys
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from kef.constants import (
    EQUATIONS,
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_NUMERIC,
    EXIT_OK,
    KS_C99,
)
from kef.errors import ConfigError, DomainError, NumericFailure
from kef.estimators import ks
from kef.references import REFERENCES, reference
from kef.residuals import default_grid
from kef.resolve import (
    RunConfig,
    log,
    parse_grid,
    parse_params,
    resolve_law,
    resolve_run,
)
from kef.simulation import SAMPLERS, batch, simulate_gou_path, substream
from kef.suite import CheckSuite, run_equation

logger = logging.getLogger(__name__)

TRANSFORM_EQUATIONS = ("cf", "laplace")
POSITIVE_EQUATIONS = ("density-laplace", "generator")


def parse_arguments() -> argparse.Namespace:
    """Parses command-line arguments.

    Returns:
        argparse.Namespace: The parsed arguments.
    """
    parser = argparse.ArgumentParser(
        description="Simulate killed exponential functionals and check their distributional equations."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug diagnostics")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file (xi, eta, q, sim)")
    common.add_argument("--reference", help=f"Reference law: {', '.join(sorted(REFERENCES))}")
    common.add_argument("--params", help="JSON object of reference law parameters")
    common.add_argument("--q", type=float, default=None, help="Killing rate (overrides the config)")
    common.add_argument("--seed", type=int, default=None, help="Master seed (unsigned 64-bit)")
    common.add_argument("--workers", type=int, default=None, help="Worker threads (default: KEF_THREADS or CPU count)")
    common.add_argument("-o", "--out", default=None, help="Output path")
    common.add_argument(
        "--assume-convergence",
        action="store_true",
        default=None,
        help="Assert that V exists when q = 0 and the sufficient check fails",
    )

    simulate = commands.add_parser("simulate", parents=[common], help="Draw samples of V to CSV")
    simulate.add_argument("--n", type=int, default=1000, help="Number of draws")
    simulate.add_argument("--sampler", default="direct", choices=sorted(SAMPLERS), help="Sampling scheme")

    check = commands.add_parser("check", parents=[common], help="Evaluate a distributional equation")
    check.add_argument("--equation", default="all", choices=[*EQUATIONS, "all"], help="Equation id")
    check.add_argument("--samples", help="CSV of draws to check instead of the reference law")
    check.add_argument("--grid", help='Evaluation grid "a:b:n" or "a:b:n:log"')
    check.add_argument("--tol", type=float, default=None, help="Tolerance override")

    gof = commands.add_parser("gof", parents=[common], help="KS distance of draws to a reference law")
    gof.add_argument("--n", type=int, default=1000, help="Number of draws")
    gof.add_argument("--sampler", default="direct", choices=sorted(SAMPLERS), help="Sampling scheme")
    gof.add_argument("--samples", help="CSV of draws instead of simulating")
    gof.add_argument("--from-reference", action="store_true", help="Draw from the reference sampler itself")
    gof.add_argument("--tol", type=float, default=None, help="KS threshold (default: 1.63/sqrt(n))")

    ref = commands.add_parser("reference", parents=[common], help="Tidy CSV of a reference density and CDF")
    ref.add_argument("name", nargs="?", help="Reference law name")
    ref.add_argument("--grid", default="0.01:5:100", help='Evaluation grid "a:b:n" or "a:b:n:log"')

    gou = commands.add_parser("gou", parents=[common], help="Tidy CSV of a generalized Ornstein-Uhlenbeck path")
    gou.add_argument("--x0", type=float, default=0.0, help="Starting value")
    gou.add_argument("--T", type=float, default=10.0, help="Path horizon")

    return parser.parse_args()


def _run_config(args: argparse.Namespace) -> RunConfig:
    return resolve_run(
        args.config,
        args.reference,
        parse_params(args.params),
        {"q": args.q, "seed": args.seed, "assume_convergence": args.assume_convergence},
    )


def _write_tidy(path: Path, header: str, rows: Iterable[tuple]) -> None:
    def cell(value):
        return format(value, ".17g") if isinstance(value, float) else str(value)

    lines = [header, *(",".join(cell(v) for v in row) for row in rows)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        logging.info(f"📝 Report written to {out}")
    else:
        print(text)


def _grid_for(equation: str, text: str | None) -> np.ndarray:
    """The --grid if given, else a default suited to the equation's variable."""
    if text:
        return parse_grid(text)
    if equation in TRANSFORM_EQUATIONS:
        return np.linspace(0.1, 10.0, 12)
    if equation in POSITIVE_EQUATIONS:
        return default_grid(0.05, 5.0, 12, symmetric=False)
    return default_grid(0.05, 5.0, 12)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Writes n draws of V as CSV plus a JSON sidecar."""
    run = _run_config(args)
    out = Path(args.out or "samples.csv")
    logging.info(f"🎲 Drawing {args.n} samples with the {args.sampler} sampler...")
    draws = batch(args.n, args.sampler, run.xi, run.eta, run.q, run.sim, args.workers, run.assume_convergence)
    draws.write_csv(out)
    draws.write_sidecar(out.with_suffix(".json"), run.to_dict())
    if draws.bias_note.convergence_assumed:
        log("WARN", "Convergence of the integral is assumed, not verified.")
    log("OK", f"{draws.n} draws written to {out}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    """Evaluates one equation (or all that apply) and reports PASS/FAIL."""
    run = _run_config(args)
    law = resolve_law(run, args.samples)
    xi, eta = run.xi.triplet, run.eta.triplet
    workers = args.workers or 1
    logging.info(f"🔍 Checking {law.name}...")

    if args.equation == "all":
        suite = CheckSuite(law, xi, eta, run.q)
        suite.run_all({eq: _grid_for(eq, args.grid) for eq in EQUATIONS}, args.tol, workers)
        suite.print_summary()
        _emit(suite.to_dict(), args.out)
        return EXIT_OK if suite.passed else EXIT_FAIL

    report = run_equation(args.equation, _grid_for(args.equation, args.grid), xi, eta, run.q, law, args.tol, workers)
    _emit(report.to_dict(), args.out)
    log(
        "OK" if report.passed else "FAIL",
        f"{report.equation}: sup {report.norm_sup:.3g}, budget {report.budget:.3g},"
        f" {'PASS' if report.passed else 'FAIL'}",
    )
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_gof(args: argparse.Namespace) -> int:
    """Two-sided KS distance between draws and the reference CDF."""
    run = _run_config(args)
    if run.reference is None:
        raise ConfigError("gof needs --reference NAME")
    law = run.reference.law
    if args.samples:
        values = resolve_law(run, args.samples).values
    elif args.from_reference:
        values = law.sample(substream(run.sim.master_seed, 0), args.n)
    else:
        values = batch(
            args.n, args.sampler, run.xi, run.eta, run.q, run.sim, args.workers, run.assume_convergence
        ).values
    distance = ks(values, law.cdf_at)
    threshold = args.tol if args.tol is not None else KS_C99 / math.sqrt(values.size)
    passed = distance < threshold
    _emit({"ks": distance, "threshold": threshold, "n": int(values.size), "pass": passed}, args.out)
    log("OK" if passed else "FAIL", f"KS {distance:.4g} against threshold {threshold:.4g}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_reference(args: argparse.Namespace) -> int:
    """Writes density and CDF of a registry law as tidy CSV (z, value, series)."""
    name = args.name or args.reference
    if not name:
        for known in sorted(REFERENCES):
            logging.info(known)
        return EXIT_OK
    ref = reference(name, parse_params(args.params))
    law = ref.law
    grid = parse_grid(args.grid)
    rows = []
    if law.has_density:
        rows.extend((float(z), float(v), "density") for z, v in zip(grid, np.atleast_1d(law.pdf(grid))))
    rows.extend((float(z), float(v), "cdf") for z, v in zip(grid, np.atleast_1d(law.cdf_at(grid))))
    out = Path(args.out or f"{name}.csv")
    _write_tidy(out, "z,value,series", rows)
    log("OK", f"{name} ({len(rows)} rows) written to {out}")
    return EXIT_OK


def cmd_gou(args: argparse.Namespace) -> int:
    """Writes one GOU path as tidy CSV (t, value, series) with series X, xi and eta."""
    run = _run_config(args)
    path = simulate_gou_path(run.xi, run.eta, args.x0, args.T, run.sim, substream(run.sim.master_seed, 0))
    rows = []
    for series, values in (("X", path.values), ("xi", path.xi), ("eta", path.eta)):
        rows.extend((float(t), float(v), series) for t, v in zip(path.times, values))
    out = Path(args.out or "gou.csv")
    _write_tidy(out, "t,value,series", rows)
    log("OK", f"Path with {path.times.size} points written to {out}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "check": cmd_check,
    "gof": cmd_gof,
    "reference": cmd_reference,
    "gou": cmd_gou,
}


def main() -> None:
    """Main entry point for the kef tool.

    Runs the chosen subcommand and exits with 0 on success, 2 on a
    configuration or domain error, 3 on a numerical failure and 4 when a
    check fails.
    """
    args = parse_arguments()
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")

    try:
        code = COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        logger.debug("Configuration error", exc_info=True)
        log("FAIL", str(exc))
        sys.exit(EXIT_CONFIG)
    except NumericFailure as exc:
        logger.debug("Numerical failure", exc_info=True)
        log("FAIL", str(exc))
        sys.exit(EXIT_NUMERIC)
    sys.exit(code)


if __name__ == "__main__":
    main()
