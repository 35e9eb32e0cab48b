#!/usr/bin/env python3
"""ESP Ewald - Main entry point."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

import colorlog

from esp_ewald.cli.commands import RunConfig, cmd_bench, cmd_check, cmd_eval, cmd_table
from esp_ewald.config.settings import Settings, settings
from esp_ewald.data.systems import GeneratorSpec
from esp_ewald.errors import EwaldError, SystemFormatError
from esp_ewald.ewald.parameters import ParameterOverrides

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """Colored console logging plus an optional plain log file."""
    stream = colorlog.StreamHandler(sys.stdout)
    stream.setFormatter(colorlog.ColoredFormatter("%(log_color)s" + LOG_FORMAT))
    handlers: list[logging.Handler] = [stream]
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handlers.append(file_handler)
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), handlers=handlers, force=True)


class UsageParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    source = common.add_argument_group("system")
    source.add_argument("--input", type=Path, help="Particle file (N / box Lx Ly Lz / q x y z lines)")
    source.add_argument("--generate", choices=["random", "rocksalt", "water-like-lattice", "water"], help="Generate a system")
    source.add_argument("--n", type=int, default=512, help="Particle count of generated systems (default: 512)")
    source.add_argument("--box", type=float, help="Cubic box length of generated systems")
    source.add_argument("--spacing", type=float, default=1.0, help="Lattice spacing when --box is not given")
    source.add_argument("--seed", type=int, default=0, help="Generator seed (default: 0)")

    method = common.add_argument_group("method")
    method.add_argument("--family", choices=["pswf", "gaussian"], help="Splitting family")
    method.add_argument("--eps", type=float, help="Target precision")
    method.add_argument("--rc", type=float, help="Cutoff radius")
    method.add_argument("--nf", type=int, help="Grid points per dimension (override)")
    method.add_argument("--order", "-P", type=int, dest="order", help="Window order P (override)")
    method.add_argument("--c1", type=float, help="Prolate window bandwidth (override)")
    method.add_argument("--gaussian-order", type=int, help="Window order of the Gaussian baseline")
    method.add_argument("--force-method", choices=["ad", "ik"], help="Spectral force method")
    method.add_argument("--no-gate", action="store_true", help="Build under-resolved plans with a warning")

    run = common.add_argument_group("execution")
    run.add_argument("--threads", type=int, help="Worker threads")
    run.add_argument("--deterministic", action="store_true", default=None, help="Fixed accumulation order")
    run.add_argument("--out", type=Path, help="Output directory")
    run.add_argument("--env-file", type=str, help="Path to .env file")
    run.add_argument("--log-file", type=str, help="Also log to this file")
    run.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog="esp-ewald",
        description="ESP Ewald - periodic electrostatics with prolate splitting kernels",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s eval --generate rocksalt --n 8 --rc 0.9 --eps 1e-5   Madelung energy
  %(prog)s check --generate random --n 512 --box 10 --rc 1.25   Certify against direct Ewald
  %(prog)s check --generate random --nf 20 --no-gate            Under-resolved negative control
  %(prog)s bench --generate water-like-lattice --n 3000 --eps 1e-4            Grid ratio and stage timings
  %(prog)s table                                                 Shape parameters and bandlimits
        """,
    )
    common = _common_options()
    commands = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    eval_parser = commands.add_parser("eval", parents=[common], help="Evaluate potentials, forces and energy")
    eval_parser.add_argument("--dump-kernels", action="store_true", help="Write kernel coefficient tables")
    eval_parser.add_argument("--dump-grid", action="store_true", help="Write the spread charge grid")

    commands.add_parser("check", parents=[common], help="Certify accuracy against direct Ewald")

    bench_parser = commands.add_parser("bench", parents=[common], help="Compare PSWF and Gaussian plans")
    bench_parser.add_argument("--repeats", type=int, help="Timed repetitions per plan")

    commands.add_parser("table", parents=[common], help="Shape and order table, bandlimit comparison")
    return parser


def config_from_args(args: argparse.Namespace, config: Settings) -> RunConfig:
    generator = None
    if args.generate:
        generator = GeneratorSpec(args.generate, args.n, box=args.box, seed=args.seed, spacing=args.spacing)
    overrides = ParameterOverrides(
        n_f=args.nf,
        P=args.order,
        c1=args.c1,
    )
    return RunConfig.from_settings(
        args.command,
        config,
        input_path=args.input,
        generator=generator,
        family=args.family,
        eps=args.eps,
        r_c=args.rc,
        overrides=overrides,
        force_method=args.force_method,
        gaussian_order=args.gaussian_order,
        out_dir=args.out,
        threads=args.threads,
        deterministic=args.deterministic,
        gate=not args.no_gate,
        repeats=getattr(args, "repeats", None),
        dump_kernels=getattr(args, "dump_kernels", False),
        dump_grid=getattr(args, "dump_grid", False),
    )


def run(run_config: RunConfig) -> int:
    """Execute a command and print its summary; returns the exit code."""
    if run_config.command == "table":
        table = cmd_table(run_config)
        print(f"\n{'=' * 60}")
        print("PARAMETER TABLE")
        print("=" * 60)
        print(table.to_string(index=False))
        return EXIT_OK

    if run_config.command == "eval":
        result = cmd_eval(run_config)
        print(f"\n{'=' * 60}")
        print(f"EVAL: N={result.potentials.shape[0]}, energy={result.energy:.12g}")
        print("=" * 60)
        for stage, seconds in result.timings.items():
            print(f"  {stage}: {seconds * 1e3:.2f} ms")
        return EXIT_OK

    if run_config.command == "check":
        report = cmd_check(run_config)
        print(f"\n{'=' * 60}")
        print(f"CHECK {report.verdict}: delta={report.delta:.3e} (eps={report.eps:g}, {report.family})")
        print("=" * 60)
        return EXIT_OK if report.passed else EXIT_NUMERICAL

    report = cmd_bench(run_config)
    print()
    print(report.format())
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point with CLI argument parsing."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Load config
    if args.env_file:
        config = Settings.load(Path(args.env_file))
    else:
        config = settings

    configure_logging("DEBUG" if args.verbose else config.log_level, args.log_file)

    errors = config.validate()
    if errors:
        for error in errors:
            logger.error(f"Configuration error: {error}")
        return EXIT_USAGE

    try:
        run_config = config_from_args(args, config)
    except SystemFormatError as e:
        logger.error(str(e))
        return EXIT_USAGE
    problems = run_config.validate() if run_config.command != "table" else []
    if problems:
        for problem in problems:
            logger.error(problem)
        return EXIT_USAGE

    try:
        return run(run_config)
    except (OSError, SystemFormatError) as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO
    except EwaldError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
