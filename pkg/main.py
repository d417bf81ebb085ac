"""
Main CLI Entry Point
Unified command-line interface for:
- Evaluating r, s, d̂, f and f̄ on hyperbolic groups
- Estimating the constants of the construction
- Verifying the claimed properties
- Exporting Cayley balls and managing memo caches
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from src.cli.commands import cmd_cache, cmd_estimate, cmd_eval, cmd_export_ball, cmd_verify
from src.exceptions import BolicError
from src.services.verification_service import SUITES
from src.utils.logger import get_logger, set_level

logger = get_logger(__name__)

WORD_GRAMMAR = """
Words:
  Generator labels with an optional inverse suffix ^-1, ^{-1} or ', written
  whitespace-separated or concatenated ("ab^-1a", "a b' a"). "1" is the
  identity. Free groups use a, b, c, ...; free products of cyclic groups use
  s, t, u, ... (an order-2 factor has one self-inverse label).
"""

EXAMPLES = """
Examples:
  # r(1, g) for a word of length 11 in F2
  python main.py eval --group free:2 --r 1 "aaaaaaaaaaa"

  # f̄(b, a) as an exact chain, with 6-digit display decimals
  python main.py eval --group freeprod:2,3 --delta 1 --fbar 1 "stst" --decimal 6

  # Estimate every constant on B(1,20)
  python main.py estimate --group free:2 --radius 20 --budget 2000 --seed 7 --output constants.json

  # Verify the structural suite
  python main.py verify --suite structural --group free:2 --radius 20 --budget 10000 --seed 7

  # Verify everything with previously estimated constants, exporting decay bins
  python main.py verify --group free:2 --constants constants.json --csv bins.csv

  # Export B(1,8) as a table model and evaluate through it
  python main.py export-ball --group freeprod:2,3 --delta 1 --radius 8 ball.json
  python main.py eval --group table:ball.json --delta 1 --r 1 "stst"

  # Memo caches
  python main.py cache inspect
  python main.py cache clear
"""


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="RunConfig JSON file (flags override its values)")
    parser.add_argument("--group", help="free:<rank> | freeprod:<k1,k2,...> | table:<path>")
    parser.add_argument("--delta", type=int, help="Fineness constant (default 1 for free groups)")
    parser.add_argument("--generator-order", help="Comma-separated generator labels in ShortLex order")
    parser.add_argument("--arithmetic", choices=["exact", "float"], help="Number mode (default: exact)")
    parser.add_argument("--cache", type=Path, help="Memo cache file to load and save")
    parser.add_argument("--workers", type=int, help="Worker threads (default: machine parallelism)")
    parser.add_argument("--decimal", type=int, metavar="K",
                        help="Add a K-digit decimal rendering (display only)")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])


def _add_sampling_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--radius", type=int, help="Sample radius R: points are drawn from B(1,R)")
    parser.add_argument("--budget", type=int, help="Samples per quantity (default: 1000)")
    parser.add_argument("--seed", type=int, help="Random seed (default: 0)")
    parser.add_argument("--c2-source", choices=["empirical", "formula", "user"],
                        help="Where d̂ takes C2 from (default: empirical)")
    parser.add_argument("--c2", help="User C2 (implies --c2-source user)")
    parser.add_argument("--c2-margin", help="Safety margin added to the empirical C2 (default: 1)")
    parser.add_argument("--output", type=Path, help="Write the JSON result here instead of stdout")
    parser.add_argument("--star-radius-factor", type=int, help=argparse.SUPPRESS)
    parser.add_argument("--projection-step-factor", type=int, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bolic",
        description="Bolic metric toolkit for hyperbolic groups",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=WORD_GRAMMAR + EXAMPLES,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # ==================== EVAL ====================
    eval_parser = subparsers.add_parser(
        "eval", help="Evaluate r, s, d̂, f, f̄, d or the midpoint",
        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=WORD_GRAMMAR,
    )
    _add_model_arguments(eval_parser)
    eval_parser.add_argument("--c2", help="C2 for d̂ and midpoints")
    eval_parser.add_argument("--constants", type=Path, help="Take C2 from an estimate output")
    eval_parser.add_argument("--output", type=Path, help="Write the JSON result here instead of stdout")
    query = eval_parser.add_mutually_exclusive_group(required=True)
    query.add_argument("--r", nargs=2, metavar=("A", "B"), help="r(A, B)")
    query.add_argument("--s", nargs=2, metavar=("A", "B"), help="s(A, B)")
    query.add_argument("--dhat", nargs=2, metavar=("A", "B"), help="d̂(A, B)")
    query.add_argument("--f", nargs=2, metavar=("B", "A"), help="the chain f(B, A)")
    query.add_argument("--fbar", nargs=2, metavar=("B", "A"), help="the chain f̄(B, A)")
    query.add_argument("--distance", nargs=2, metavar=("A", "B"), help="word distance d(A, B)")
    query.add_argument("--midpoint", nargs=2, metavar=("X", "Y"), help="m(X, Y) on p[X, Y]")
    eval_parser.set_defaults(func=cmd_eval)

    # ==================== ESTIMATE ====================
    estimate_parser = subparsers.add_parser("estimate", help="Estimate the constants (ConstantsRecord JSON)")
    _add_model_arguments(estimate_parser)
    _add_sampling_arguments(estimate_parser)
    estimate_parser.add_argument("--mode", choices=["empirical", "formula"], default="empirical",
                                 help="empirical suprema or closed-form upper bounds (default: empirical)")
    estimate_parser.add_argument("--set", action="append", metavar="NAME=VALUE",
                                 help="Override a constant (repeatable), e.g. --set C2=5/2")
    estimate_parser.set_defaults(func=cmd_estimate)

    # ==================== VERIFY ====================
    verify_parser = subparsers.add_parser("verify", help="Run property suites (exit 1 on any failure)")
    _add_model_arguments(verify_parser)
    _add_sampling_arguments(verify_parser)
    verify_parser.add_argument("--suite", action="append", choices=[*SUITES, "all"],
                               help="Suite to run (repeatable, default: all)")
    verify_parser.add_argument("--constants", type=Path,
                               help="ConstantsRecord or estimate output (default: estimate first)")
    verify_parser.add_argument("--csv", type=Path, help="Write decay bins as CSV")
    verify_parser.set_defaults(func=cmd_verify)

    # ==================== EXPORT-BALL ====================
    export_parser = subparsers.add_parser("export-ball", help="Write B(1,R) as a Table-Model JSON file")
    _add_model_arguments(export_parser)
    export_parser.add_argument("--radius", type=int, required=True, help="Ball radius")
    export_parser.add_argument("path", type=Path, help="Output file")
    export_parser.set_defaults(func=cmd_export_ball)

    # ==================== CACHE ====================
    cache_parser = subparsers.add_parser("cache", help="Memo cache management")
    cache_subparsers = cache_parser.add_subparsers(dest="cache_command", help="Cache operations")

    inspect_parser = cache_subparsers.add_parser("inspect", help="Show fingerprint, version and entry count")
    inspect_parser.add_argument("path", nargs="?", help="Cache file (default: every file in the cache dir)")
    inspect_parser.add_argument("--cache-dir", help="Cache directory (default: BOLIC_CACHE_DIR)")
    inspect_parser.set_defaults(func=cmd_cache)

    clear_parser = cache_subparsers.add_parser("clear", help="Delete memo cache files")
    clear_parser.add_argument("--cache-dir", help="Cache directory (default: BOLIC_CACHE_DIR)")
    clear_parser.set_defaults(func=cmd_cache, path=None)

    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run the subcommand.

    Returns:
        0 on success, 1 on property failure, 2 on usage or configuration
        errors, 3 on resource errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if not getattr(args, "func", None):
        parser.print_help()
        return 0

    if getattr(args, "log_level", None):
        set_level(args.log_level)

    try:
        return args.func(args)
    except BolicError as e:
        logger.error(f"❌ {e}")
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        return e.exit_code


def main():
    """Main CLI entry point"""
    sys.exit(run_command())


if __name__ == "__main__":
    main()
