"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 capability error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import report as rpt
from . import scenario as scn_mod
from . import tables
from .errors import CapabilityError, DomainError, InvariantViolation
from .stability import DEFAULT_EPSILON

EXIT_OK, EXIT_VALIDATION, EXIT_CAPABILITY, EXIT_INVARIANT = 0, 2, 3, 4


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--format", choices=scn_mod.FORMATS, default=default(None),
                        help="output format (default: the scenario's, or markdown)")
    parser.add_argument("--seed", type=int, default=default(0), help="RNG seed for sampling")
    parser.add_argument("--epsilon", type=float, default=default(DEFAULT_EPSILON),
                        help="strict-preference slack in money units")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskpool", description="Pricing and stability analysis for two-type insurance risk pools."
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("run", parents=[common], help="run the analyses listed in a scenario")
    p.add_argument("scenario", help="scenario file or bundled name (table1, table2, table3)")
    sub.add_parser("tables", parents=[common], help="regenerate the three worked pricing tables")
    for name, helptext in (("audit", "audit every scheme of a scenario"),
                           ("stability", "core-stability and cascade analysis"),
                           ("shapley", "exact and sampled Shapley prices")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("scenario")
        if name == "shapley":
            p.add_argument("--permutations", type=int, default=2_000)

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter and report prices and stability")
    p.add_argument("--param", required=True, choices=rpt.SWEEP_PARAMS)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--scenario", default="table2")
    return parser


def _emit(text: str, out):
    out.write(text)
    if not text.endswith("\n"):
        out.write("\n")


def _run(args, out) -> int:
    if args.command == "tables":
        built = tables.build_tables()
        fmt = args.format or "markdown"
        if fmt == "csv":
            _emit(tables.to_csv(built), out)
        elif fmt == "json-report":
            _emit(rpt.to_json(tables.to_report(built)), out)
        else:
            _emit(tables.to_markdown(built), out)
        return EXIT_OK

    scn = scn_mod.load(args.scenario)
    if args.command == "sweep":
        rows = rpt.sweep(scn, args.param, args.start, args.stop, args.steps, args.epsilon)
        fmt = args.format or "csv"
        if fmt == "json-report":
            _emit(rpt.to_json({"sweep": rows}), out)
        elif fmt == "markdown":
            _emit(rpt.rows_to_markdown(rows), out)
        else:
            _emit(rpt.rows_to_csv(rows), out)
        return EXIT_OK

    analyses = {
        "run": None,
        "audit": ["audit"],
        "stability": ["stability", "cascade"],
        "shapley": ["shapley"],
    }[args.command]
    result = rpt.run_scenario(
        scn, analyses, epsilon=args.epsilon, seed=args.seed,
        permutations=getattr(args, "permutations", 2_000),
    )
    _emit(rpt.render(result.doc, args.format or scn.format), out)
    for msg in result.capability_errors + result.invariant_errors:
        print(f"riskpool: {msg}", file=sys.stderr)
    return result.exit_code


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return _run(args, out)
    except scn_mod.ScenarioError as exc:
        print(f"riskpool: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"riskpool: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapabilityError as exc:
        print(f"riskpool: unsupported: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except InvariantViolation as exc:
        print(f"riskpool: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
