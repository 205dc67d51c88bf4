import argparse
from collections.abc import Sequence

from blindeq import __version__
from blindeq.cli.commands import cmd_constellation, cmd_convergence, cmd_gradcheck, cmd_sweep
from blindeq.cli.error_handler import run_with_handlers
from blindeq.cli.gradcheck_suites import SUITES
from blindeq.core.config import settings
from blindeq.core.logging import get_logger, setup_logging

logger = get_logger(__name__)

DEFAULT_GRID = "1024x1e-3,1024x1e-2,64x1e-3,64x1e-2"


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="YAML experiment document or a preset name")
    parser.add_argument("--out", default=None, help=f"Output directory (default: {settings.OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, default=None, help="Override the document's master seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads; 1 is fully deterministic (default: BLINDEQ_THREADS)",
    )
    parser.add_argument("--profile", choices=("desk", "paper"), default=None, help="Preset scale profile")
    parser.add_argument("--no-plot", action="store_true", help="Skip SVG plots")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindeq", description="Blind channel equalization experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Train a fresh equalizer per sweep point and report SER")
    _experiment_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    convergence = sub.add_parser("convergence", help="SER traces per (batch size, learning rate) cell")
    _experiment_flags(convergence)
    convergence.add_argument("--grid", default=DEFAULT_GRID, help="Cells as <batch>x<lr>, comma separated")
    convergence.set_defaults(handler=cmd_convergence)

    gradcheck = sub.add_parser("gradcheck", help="Finite-difference check of the analytic gradients")
    gradcheck.add_argument("--module", default="all", help=f"all or a comma-separated subset of {', '.join(SUITES)}")
    gradcheck.add_argument("--inject-fault", choices=("sign-flip",), default=None, help=argparse.SUPPRESS)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    constellation = sub.add_parser("constellation", help="Export equalized scatter tables and checkpoints")
    _experiment_flags(constellation)
    constellation.add_argument("--point", type=int, default=0, help="Sweep point index")
    constellation.add_argument("--symbols", type=int, default=4096, help="Symbols per scatter table")
    constellation.set_defaults(handler=cmd_constellation)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else None)
    logger.debug(f"{settings.APP_NAME} {__version__} ({settings.ENVIRONMENT}): {args.command}")
    return run_with_handlers(lambda: args.handler(args))


if __name__ == "__main__":
    raise SystemExit(main())
