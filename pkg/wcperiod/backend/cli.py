"""
Command-line front end.

    wcperiod certify <scenario>         certificates only
    wcperiod solve <scenario>           certificates and solver(s)
    wcperiod oracle-compare <scenario>  both solvers, report their gap
    wcperiod reproduce <id>             published constants of an example

Exit codes: 0 ok, 2 resonance, 3 certificate failed, 4 nonconvergence,
64 usage, 65 parse error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

BACKEND_DIR = Path(__file__).resolve().parent
if str(BACKEND_DIR) not in sys.path:
    sys.path.insert(0, str(BACKEND_DIR))

from services import config  # noqa: E402
from services.errors import ScenarioError, WCPeriodError  # noqa: E402
from services.linalg import NormKind  # noqa: E402
from services.reproduce import EXAMPLES, all_within_tolerance, reproduce  # noqa: E402
from services.scenarios import (  # noqa: E402
    EXIT_CERTIFICATE_FAILED,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_USAGE,
    RunMode,
    load_scenario,
    run_scenario,
    with_overrides,
)

logger = logging.getLogger("wcperiod")


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors, which is the resonance code here."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="wcperiod", description="(omega, c)-periodic solutions and their certificates")
    parser.add_argument(
        "--log-level",
        default=config.LOG_LEVEL,
        help="Logging level (default from WCPERIOD_LOG_LEVEL, else WARNING)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    for name, help_text in (
        ("certify", "evaluate the certificates of a scenario"),
        ("solve", "certify and solve a scenario"),
        ("oracle-compare", "solve with both methods and report their gap"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("scenario", type=Path, help="Scenario JSON document")
        sub.add_argument("--grid", type=int, default=None, help="Time grid nodes")
        sub.add_argument("--tol", type=float, default=None, help="Fixed-point tolerance")
        sub.add_argument("--norm", choices=[kind.value for kind in NormKind], default=None, help="Norm on C^n")
        sub.add_argument("--out", type=Path, default=Path("."), help="Directory for the artifacts")

    reproduce_parser = subparsers.add_parser("reproduce", help="recompute the constants of a worked example")
    reproduce_parser.add_argument("example_id", help=f"one of {', '.join(EXAMPLES)}")
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _run_reproduce(parser: argparse.ArgumentParser, example_id: str) -> int:
    if example_id not in EXAMPLES:
        parser.error(f"unknown example {example_id!r}; choose from {', '.join(EXAMPLES)}")
    table = reproduce(example_id)
    print(table.to_string(index=False, float_format=lambda value: f"{value:.9g}"))
    return EXIT_OK if all_within_tolerance(table) else EXIT_CERTIFICATE_FAILED


def _run_scenario_command(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
        scenario = with_overrides(scenario, grid=args.grid, tol=args.tol, norm=args.norm)
    except OSError as exc:
        print(f"wcperiod: cannot read {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        for message in exc.errors:
            print(f"{args.scenario}: {message}", file=sys.stderr)
        return EXIT_PARSE

    try:
        outcome = run_scenario(scenario, mode=RunMode(args.command), out_dir=args.out)
    except ScenarioError as exc:
        for message in exc.errors:
            print(f"{args.scenario}: {message}", file=sys.stderr)
        return EXIT_PARSE
    except WCPeriodError as exc:
        logger.exception("Scenario %s failed", scenario.name)
        print(f"wcperiod: {exc}", file=sys.stderr)
        return EXIT_USAGE

    summary = outcome.report()
    summary["certificates"] = [
        {
            "theorem": certificate.theorem.value,
            "verdict": certificate.verdict.value,
            "contraction": certificate.contraction,
            "bound": certificate.bound,
            "reason": certificate.reason,
        }
        for certificate in outcome.certificates
    ]
    print(json.dumps(summary, indent=2, default=str))
    return outcome.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    if args.command == "reproduce":
        return _run_reproduce(parser, args.example_id)
    return _run_scenario_command(args)


if __name__ == "__main__":
    sys.exit(main())
