import argparse
import asyncio
import sys
import time
from typing import Any, Dict, List, NoReturn, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from quiver_capacity.commands import COMMAND_REGISTRY
from quiver_capacity.commands.base import EXIT_USAGE
from quiver_capacity.errors import QuiverCapacityError
from quiver_capacity.logger import init_logger
from quiver_capacity.settings import SolverOptions
from quiver_capacity.utils import render_report

# CLI flag destinations mapped to SolverOptions fields
OPTION_FLAGS: Dict[str, str] = {
    "tol": "tol",
    "max_iter": "max_iter",
    "floor": "cap_floor",
    "damping": "damping",
    "seed": "seed",
    "rank_tol": "rank_tol",
    "budget": "violator_budget",
    "restarts": "restarts",
    "threads": "threads",
}


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 is the Infeasible verdict here, so usage errors exit 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("datum", help="Path to the datum JSON file (kind 'ajn' or 'quiver')")
    common.add_argument("--tol", type=float, help="Stationarity residual tolerance (default: 1e-8)")
    common.add_argument("--max-iter", type=int, help="Iteration cap (default: 10000)")
    common.add_argument("--floor", type=float, help="Capacity floor for infeasibility (default: 1e-12)")
    common.add_argument("--damping", type=float, help="Log-space damping of every step, in [0, 1) (default: 0)")
    common.add_argument("--seed", type=int, help="Seed for randomized searches and restarts (default: 0)")
    common.add_argument("--rank-tol", type=float, help="Relative tolerance for numerical rank (default: 1e-10)")
    common.add_argument("--budget", type=int, help="Violator search budget (default: 10000)")
    common.add_argument("--restarts", type=int, help="Random restarts for probe (default: 20)")
    common.add_argument("--threads", type=int, help="Concurrent restart solves for probe (default: 1)")
    common.add_argument("--log-dir", default="logs", help="Directory for log files (default: logs)")
    output = common.add_mutually_exclusive_group()
    output.add_argument("--json", action="store_true", help="Print the JSON report (default)")
    output.add_argument("--pretty", action="store_true", help="Print a human-readable report")

    parser = ArgumentParser(prog="quiver-capacity", description="Quiver capacity and AJN best-constant solver")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("capacity", parents=[common], help="Compute the capacity and the AJN constant")
    subparsers.add_parser("scale", parents=[common], help="Scale the datum to geometric form")
    subparsers.add_parser("check", parents=[common], help="Decide feasibility with evidence")
    gap = subparsers.add_parser("gap", parents=[common], help="Evaluate the gaussian entropy gap at a sigma tuple")
    gap.add_argument("--sigma", required=True, help="Path to a JSON list of SPD matrices, one per source")
    subparsers.add_parser("probe", parents=[common], help="Probe uniqueness of the gaussian extremizer")
    return parser


def solver_options_from_args(args: argparse.Namespace) -> SolverOptions:
    """Environment (and .env) values, overridden by the flags given explicitly."""
    overrides: Dict[str, Any] = {
        field: getattr(args, flag) for flag, field in OPTION_FLAGS.items() if getattr(args, flag) is not None
    }
    return SolverOptions(**overrides)


async def main_async(argv: Optional[List[str]] = None) -> int:
    # Load environment variables from .env file
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        logger = init_logger(log_dir=args.log_dir)
    except OSError as e:
        sys.stderr.write(f"Logger initialization failed: {e}\n")
        return EXIT_USAGE

    try:
        opts = solver_options_from_args(args)
    except ValidationError as e:
        sys.stderr.write(f"Option Error: {e}\n")
        return EXIT_USAGE

    logger.info(f"Starting quiver-capacity {args.command}")
    logger.debug(f"Parsed arguments: {args}")

    config: Dict[str, Any] = {"datum": args.datum, "options": opts}
    if args.command == "gap":
        config["sigma"] = args.sigma

    start_time = time.time()
    try:
        command = COMMAND_REGISTRY[args.command](config, logger)
        outcome = await command.run()
    except QuiverCapacityError as e:
        error_message = f"{type(e).__name__}: {e}"
        logger.error(error_message)
        sys.stderr.write(f"{error_message}\n")
        return EXIT_USAGE

    elapsed = time.time() - start_time
    logger.info(f"{args.command} finished with status {outcome.report.status} in {elapsed:.2f} seconds")

    output = render_report(outcome.report) if args.pretty else outcome.report.to_json()
    sys.stdout.write(output.rstrip("\n") + "\n")
    return outcome.exit_code


def main(argv: Optional[List[str]] = None) -> None:
    try:
        exit_code = asyncio.run(main_async(argv))
    except KeyboardInterrupt:
        sys.stderr.write("Execution interrupted by user.\n")
        sys.exit(EXIT_USAGE)
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
