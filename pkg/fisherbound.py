#!/usr/bin/env python3
"""
fisherbound - Moment-based Fisher information bounds from the command line.

Evaluates the bound S(theta) for analytic models, measures it for nonlinear
systems by Monte-Carlo simulation, sweeps parameter grids into information
loss curves and regenerates the loss and moment figures.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

from src.analysis import (
    FigureTable,
    SweepMode,
    evaluate_point,
    records_table,
    resolve_mode,
    run_verification,
    soft_limiter_io_curve,
    soft_limiter_losses,
    soft_limiter_moments,
    squaring_vs_hard_limiter,
    sweep,
)
from src.bound import crlb_variance
from src.errors import FisherBoundError, SweepPointError, UnsupportedAnalyticError
from src.models import ModelKind, ModelSpec, exact_fisher
from src.montecarlo import SimConfig, empirical_fisher_check, fisher_oracle_squaring
from src.record_formatter import FORMATS, RecordFormatter

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")
VERIFY_SAMPLES = 10_000_000


class UsageExitParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def status(args, message: str) -> None:
    """Print a status line to stderr unless --quiet."""
    if not args.quiet:
        print(message, file=sys.stderr)


def build_parser() -> UsageExitParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Show debug logging")
    common.add_argument("--quiet", action="store_true", help="Suppress status lines and progress bars")
    common.add_argument("--format", choices=FORMATS, default="csv", help="Output format (default: csv)")
    common.add_argument("--out", help="Output file (default: standard output)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument(
        "--model",
        choices=[kind.value for kind in ModelKind],
        required=True,
        help="System model; nu(theta)=theta, Gaussian inputs have unit variance"
    )
    model.add_argument("--gamma", type=float, default=0.0, help="Hard-limiter threshold (default: 0)")
    model.add_argument("--zeta", type=float, default=1.0, help="Soft-limiter saturation scale (default: 1)")

    simulation = argparse.ArgumentParser(add_help=False)
    simulation.add_argument("--samples", type=int, help="Monte-Carlo sample count (default: 1000000)")
    simulation.add_argument("--seed", type=int, default=42, help="Base random seed (default: 42)")
    simulation.add_argument("--fd-step", type=float, default=0.01, help="Finite-difference step (default: 0.01)")
    simulation.add_argument(
        "--crn",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Common random numbers at theta+-h (default: on)"
    )
    simulation.add_argument("--workers", type=int, help="Worker threads (default: FISHERBOUND_WORKERS or 1)")

    mode = argparse.ArgumentParser(add_help=False)
    mode.add_argument(
        "--mode",
        choices=[m.value for m in SweepMode],
        default=SweepMode.AUTO.value,
        help="analytic, montecarlo or auto (analytic when available; default: auto)"
    )

    parser = UsageExitParser(
        prog="fisherbound",
        description="fisherbound - Moment-based Fisher information bounds and information loss",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python fisherbound.py bound --model laplace-scale --theta 1
  python fisherbound.py fisher --model hard-limiter --theta 0.5 --n-obs 100
  python fisherbound.py sweep --model squaring --min 0 --max 2 --steps 81
  python fisherbound.py sweep --model soft-limiter --zeta 0.5 --min 0 --max 1 --steps 21 --samples 100000
  python fisherbound.py reproduce fig1 --out fig1.csv
  python fisherbound.py verify --monte-carlo
        """
    )
    verbs = parser.add_subparsers(dest="verb", required=True, metavar="{bound,fisher,sweep,reproduce,verify}")

    bound = verbs.add_parser("bound", parents=[common, model, simulation, mode], help="Evaluate S(theta) at one point")
    bound.add_argument("--theta", type=float, required=True, help="Parameter value")

    fisher = verbs.add_parser("fisher", parents=[common, model, simulation], help="Fisher information and CRLB")
    fisher.add_argument("--theta", type=float, required=True, help="Parameter value")
    fisher.add_argument("--empirical", action="store_true",
                        help="Estimate F from simulated outcome frequencies (finite-alphabet models)")
    fisher.add_argument("--n-obs", type=int, help="Report the CRLB 1/(N*F) for N observations")

    grid = verbs.add_parser("sweep", parents=[common, model, simulation, mode], help="Sweep a theta grid")
    grid.add_argument("--min", type=float, required=True, dest="theta_min", help="First grid point")
    grid.add_argument("--max", type=float, required=True, dest="theta_max", help="Last grid point")
    grid.add_argument("--steps", type=int, required=True, help="Number of grid points (at least 2)")

    reproduce = verbs.add_parser("reproduce", parents=[common, simulation], help="Regenerate a figure's data")
    reproduce.add_argument("figure", choices=FIGURES, help="Figure to regenerate")
    reproduce.add_argument("--zeta", type=float, default=0.5, help="Soft-limiter scale for fig3/fig4 (default: 0.5)")
    reproduce.add_argument(
        "--output-dir",
        help="Directory used when --out is absent (default: FISHERBOUND_OUTPUT_DIR or ./outputs)"
    )

    verify = verbs.add_parser("verify", parents=[common, simulation], help="Run the verification suites")
    verify.add_argument("--monte-carlo", action="store_true",
                        help=f"Include the Monte-Carlo suites (default samples: {VERIFY_SAMPLES})")
    return parser


def build_config(parser: UsageExitParser, args, default_samples: int = 1_000_000) -> SimConfig:
    try:
        workers = args.workers if args.workers is not None else int(os.getenv("FISHERBOUND_WORKERS", "1"))
        return SimConfig(
            n_samples=args.samples if args.samples is not None else default_samples,
            base_seed=args.seed,
            fd_step=args.fd_step,
            use_common_random_numbers=args.crn,
            workers=workers,
        )
    except ValueError as e:
        parser.error(str(e))


def build_model(args) -> ModelSpec:
    return ModelSpec(ModelKind(args.model), gamma=args.gamma, zeta=args.zeta)


def validate_args(parser: UsageExitParser, args) -> None:
    if args.verb == "sweep":
        if args.steps < 2:
            parser.error(f"--steps must be at least 2, got {args.steps}")
        if not args.theta_min < args.theta_max:
            parser.error(f"--min must be below --max, got {args.theta_min} >= {args.theta_max}")
    if args.verb == "fisher" and args.n_obs is not None and args.n_obs < 1:
        parser.error(f"--n-obs must be at least 1, got {args.n_obs}")


def emit(args, formatter: RecordFormatter, text: str, output_path: Optional[str]) -> None:
    written = formatter.write(text, output_path, sys.stdout)
    if written:
        status(args, f"💾 Saved: {written} ({os.path.getsize(written):,} bytes)")


def run_bound(args, config: SimConfig, formatter: RecordFormatter) -> int:
    model = build_model(args)
    mode = resolve_mode(model, SweepMode(args.mode))
    status(args, f"🔍 Evaluating S({args.theta:g}) for {model.label()} [{mode.value}]...")
    record = evaluate_point(model, args.theta, mode, config)
    status(args, f"✅ S = {record.s_value:.6g} ({record.case.value}), loss {record.loss_db:.4f} dB")
    emit(args, formatter, formatter.render_records([record]), args.out)
    return EXIT_OK


def run_fisher(args, config: SimConfig, formatter: RecordFormatter) -> int:
    model = build_model(args)
    if args.empirical:
        source = "empirical"
        value = empirical_fisher_check(model, args.theta, config)
    elif model.kind is ModelKind.SQUARING_GAUSSIAN:
        source = "quadrature"
        value = fisher_oracle_squaring(args.theta)
    else:
        source = "closed-form"
        value = exact_fisher(model, args.theta)
        if value is None:
            raise UnsupportedAnalyticError(f"{model.label()} has no closed-form Fisher information")

    status(args, f"✅ F({args.theta:g}) = {value:.6g} [{source}]")
    variance = crlb_variance(value, args.n_obs) if args.n_obs is not None else None
    if variance is not None:
        status(args, f"📏 CRLB for {args.n_obs} observations: {variance:.6g}")

    table = FigureTable(source, ("theta", "fisher", "crlb_variance"), [(args.theta, value, variance)])
    emit(args, formatter, formatter.render_table(table), args.out)
    return EXIT_OK


def run_sweep(args, config: SimConfig, formatter: RecordFormatter) -> int:
    model = build_model(args)
    grid = np.linspace(args.theta_min, args.theta_max, args.steps)
    status(args, f"🔍 Sweeping {model.label()} over {args.steps} points in [{args.theta_min:g}, {args.theta_max:g}]...")
    records = sweep(model, grid, config, SweepMode(args.mode), show_progress=show_progress(args))
    status(args, f"✅ Sweep completed: {len(records)} records")
    emit(args, formatter, formatter.render_records(records), args.out)
    return EXIT_OK


def build_figure(args, config: SimConfig) -> FigureTable:
    progress = show_progress(args)
    if args.figure == "fig1":
        return squaring_vs_hard_limiter()
    if args.figure == "fig2":
        return soft_limiter_io_curve()
    if args.figure == "fig3":
        return records_table("fig3", soft_limiter_moments(args.zeta, config=config, show_progress=progress),
                             ("mu1", "mu2", "mu3bar", "mu4bar"))
    if args.figure == "fig4":
        return records_table("fig4", soft_limiter_moments(args.zeta, config=config, show_progress=progress),
                             ("dmu1", "dmu2"))
    return soft_limiter_losses(config=config, show_progress=progress)


def run_reproduce(args, config: SimConfig, formatter: RecordFormatter) -> int:
    status(args, f"🔍 Reproducing {args.figure}...")
    table = build_figure(args, config)
    if table.notes.get("crossover") is not None:
        status(args, f"📈 Loss curves cross at theta = {table.notes['crossover']:.4f}")

    output_path = args.out
    if output_path is None:
        output_dir = args.output_dir or os.getenv("FISHERBOUND_OUTPUT_DIR", "./outputs")
        output_path = os.path.join(output_dir, formatter.default_filename(args.figure))
    emit(args, formatter, formatter.render_table(table), output_path)
    status(args, f"🎉 {args.figure}: {len(table.rows)} rows")
    return EXIT_OK


def run_verify(args, config: SimConfig, formatter: RecordFormatter) -> int:
    status(args, "🔍 Running verification suites...")
    results = run_verification(args.monte_carlo, config, show_progress(args))
    width = max(len(r.name) for r in results)
    lines = [f"{'✅' if r.passed else '❌'} {r.name.ljust(width)}  {r.detail}" for r in results]
    emit(args, formatter, "\n".join(lines) + "\n", args.out)

    failed = sum(not r.passed for r in results)
    if failed:
        status(args, f"❌ {failed} of {len(results)} checks failed")
        return EXIT_NUMERICAL
    status(args, f"🎉 All {len(results)} checks passed")
    return EXIT_OK


def show_progress(args) -> bool:
    return not args.quiet and sys.stderr.isatty()


COMMANDS = {
    "bound": run_bound,
    "fisher": run_fisher,
    "sweep": run_sweep,
    "reproduce": run_reproduce,
    "verify": run_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        validate_args(parser, args)
        default_samples = VERIFY_SAMPLES if args.verb == "verify" else 1_000_000
        config = build_config(parser, args, default_samples)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    formatter = RecordFormatter(args.format)

    try:
        return COMMANDS[args.verb](args, config, formatter)
    except SweepPointError as e:
        print(f"❌ Failed at theta={e.theta!r}: {e.cause}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FisherBoundError as e:
        theta = getattr(args, "theta", None)
        where = f" at theta={theta!r}" if theta is not None else ""
        print(f"❌ Error{where}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("\n❌ Operation cancelled by user", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
