"""
Command line entry point: python app.py <command> --config path [--out dir] [--seed n] [--tol x]
"""

import argparse
import logging
import sys
from typing import List, Optional

from commands import analyze, folner, pressure, realize, varprin
from utils.data_processing import COMMANDS, load_run_config, write_outputs
from utils.errors import PreconditionError, ResourceCapError, ToolkitError
from utils.settings import configure_logging, get_settings

logger = logging.getLogger(__name__)

RUNNERS = {
    'folner': folner.run,
    'analyze': analyze.run,
    'realize': realize.run,
    'pressure': pressure.run,
    'varprin': varprin.run,
}

DESCRIPTIONS = {
    'folner': 'Translation defects of the Følner window per generator (CSV)',
    'analyze': 'Equivariance, vertical norms and asymptotic additivity of a set map (JSON)',
    'realize': 'Additive realization, residual series and relative dichotomy (JSON + CSV)',
    'pressure': 'Pressure series, method comparison and realization gap (JSON + CSV)',
    'varprin': 'Variational-principle certificate over a measure family (JSON)',
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='app.py',
        description='Set maps over amenable group actions and thermodynamic formalism on subshifts',
    )
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='command')
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=DESCRIPTIONS[command], description=DESCRIPTIONS[command])
        sub.add_argument('--config', required=True, help='Path to the JSON run configuration')
        sub.add_argument('--out', default='results', help='Output directory (default: results)')
        sub.add_argument('--seed', type=int, default=None, help='Overrides options.seed and AMENABLE_SEED')
        sub.add_argument('--tol', type=float, default=None, help='Overrides options.tol')
        sub.add_argument('--log-level', default=None, help='Overrides AMENABLE_LOG_LEVEL')
    return parser


def _describe(error: ToolkitError) -> str:
    message = str(error)
    if isinstance(error, PreconditionError) and error.gap is not None:
        message += f" (gap = {error.gap:.6g})"
    if isinstance(error, ResourceCapError):
        message += f" (estimated count = {error.count})"
    return message


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit code

    Exit codes: 0 success, 2 configuration error, 3 precondition failure, 4 resource cap.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    _, problems = get_settings()
    for problem in problems:
        print(f"warning: {problem}", file=sys.stderr)

    if args.tol is not None and not args.tol > 0:
        print(f"error: --tol must be positive, got {args.tol}", file=sys.stderr)
        return 2

    is_valid, message, config = load_run_config(args.config, args.command, {'seed': args.seed, 'tol': args.tol})
    if not is_valid:
        print(f"error: {message}", file=sys.stderr)
        return 2
    logger.info(message)

    try:
        output = RUNNERS[args.command](config)
    except ToolkitError as e:
        print(f"error: {_describe(e)}", file=sys.stderr)
        return e.exit_code

    written = write_outputs(args.out, args.command, output.payload, output.tables)
    for path in written:
        print(path)
    return output.exit_code


if __name__ == '__main__':
    sys.exit(main())
