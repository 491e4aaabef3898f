"""Batch front end: check object files, convert between presentations,
apply fluctuations, and run the lattice convergence lab.

Exit codes: 0 when every check passes, 1 when a check fails (the report
is still emitted), 2 on parse or shape errors.  Reports are byte-stable
across runs on identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .errors import (AxiomRefusalError, DomainSectionError, InputError,
                     NcgError, ShapeError)
from .fellbundle import AxiomCheck, AxiomReport, bundle_from_json, check_bundle
from .geometry import (categorify, fell_triple_from_category, fluctuate,
                       fluctuation_terms_from_json,
                       spectral_category_from_json)
from .climit import convergence_report, parse_profile
from .matops import DEFAULT_TOL, Tolerance
from .sptriple import (FiniteSpectralTriple, check_even_axioms, check_poincare,
                       check_real_axioms, check_so_real, triple_from_json,
                       triple_to_json)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="override the relative tolerance")
    common.add_argument("--format", choices=("text", "json"), default="text",
                        help="report format (default: text)")

    parser = argparse.ArgumentParser(
        prog="ncg",
        description="Finite noncommutative geometry toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common],
                           help="run an axiom battery on an object file")
    check.add_argument("kind", choices=("triple", "bundle"))
    check.add_argument("path")

    cat = sub.add_parser("categorify", parents=[common],
                         help="triple file -> spectral category file")
    cat.add_argument("path")
    cat.add_argument("-o", "--output", required=True)

    tofell = sub.add_parser("to-fell", parents=[common],
                            help="spectral category file -> bundle triple file")
    tofell.add_argument("path")
    tofell.add_argument("-o", "--output", required=True)

    fluct = sub.add_parser("fluctuate", parents=[common],
                           help="apply a fluctuation sum to a triple's D")
    fluct.add_argument("path")
    fluct.add_argument("--terms", required=True)
    fluct.add_argument("-o", "--output", required=True)

    limit = sub.add_parser("limit", parents=[common],
                           help="lattice convergence report")
    limit.add_argument("--ns", required=True,
                       help="comma-separated lattice sizes, e.g. 64,128,256")
    limit.add_argument("--profile", required=True,
                       help="test profile, e.g. sine:1")
    limit.add_argument("--theta", default=None,
                       help="optional real phase profile, e.g. sine:1")
    return parser


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")


def _dump_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True))
        fh.write("\n")


def _print_report(title: str, report: AxiomReport, fmt: str) -> None:
    if fmt == "json":
        payload = {"command": title, "passed": report.all_passed,
                   "checks": [c.to_json() for c in report.checks]}
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    print(title)
    for c in report.checks:
        status = "info" if c.advisory else ("pass" if c.passed else "FAIL")
        line = f"  {status:<4}  {c.axiom_id:<38}  residual {c.residual:.3e}"
        if c.witness:
            line += f"  [{c.witness}]"
        print(line)
    print(f"result: {'PASS' if report.all_passed else 'FAIL'}")


def _triple_report(t: FiniteSpectralTriple, tol: Tolerance) -> AxiomReport:
    rows = list(check_even_axioms(t, tol).checks)
    for prefix, battery in (("triple.real", check_real_axioms(t, tol)),
                            ("triple.so_real", check_so_real(t, tol))):
        if battery.checks:
            rows.extend(battery.checks)
        else:
            rows.append(AxiomCheck(prefix, True, 0.0, battery.note,
                                   advisory=True))
    if t.gamma is not None:
        rows.append(check_poincare(t, tol).as_check())
    return AxiomReport(tuple(rows))


def _cmd_check(args, tol: Tolerance) -> int:
    data = _load_json(args.path)
    if args.kind == "triple":
        report = _triple_report(triple_from_json(data), tol)
        title = f"check triple {args.path}"
    else:
        report = check_bundle(bundle_from_json(data), tol)
        title = f"check bundle {args.path}"
    _print_report(title, report, args.format)
    return 0 if report.all_passed else 1


def _cmd_categorify(args, tol: Tolerance) -> int:
    triple = triple_from_json(_load_json(args.path))
    sc = categorify(triple, tol)
    _dump_json(args.output, sc.to_json())
    print(f"wrote spectral category to {args.output}")
    return 0


def _cmd_to_fell(args, tol: Tolerance) -> int:
    sc = spectral_category_from_json(_load_json(args.path), tol)
    ft = fell_triple_from_category(sc, tol)
    _dump_json(args.output, ft.to_json())
    print(f"wrote bundle triple to {args.output}")
    return 0


def _cmd_fluctuate(args, tol: Tolerance) -> int:
    triple = triple_from_json(_load_json(args.path))
    terms = fluctuation_terms_from_json(_load_json(args.terms))
    fluctuated = fluctuate(triple.D, terms, tol)
    out = FiniteSpectralTriple(triple.blocks, fluctuated, triple.gamma,
                               triple.epsilon, triple.K)
    _dump_json(args.output, triple_to_json(out))
    print(f"wrote fluctuated triple to {args.output}")
    return 0


def _cmd_limit(args, tol: Tolerance) -> int:
    try:
        ns = [int(x) for x in args.ns.split(",") if x]
    except ValueError:
        raise InputError(f"--ns {args.ns!r} is not a comma-separated "
                         f"list of integers")
    profile = parse_profile(args.profile)
    theta = parse_profile(args.theta) if args.theta else None
    report = convergence_report(profile, ns, theta)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
        return 0
    header = f"{'n':>6}  {'flat_error':>13}  {'fluct_error':>13}  {'order':>8}"
    print(f"limit profile={report.profile.label()} "
          f"theta={report.theta.label() if report.theta else '-'}")
    print(header)
    for point in report.points:
        fluct = (f"{point.fluct_error:13.6e}" if point.fluct_error is not None
                 else " " * 13)
        order = f"{point.order:8.3f}" if point.order is not None else " " * 8
        print(f"{point.n:>6}  {point.flat_error:13.6e}  {fluct}  {order}")
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "categorify": _cmd_categorify,
    "to-fell": _cmd_to_fell,
    "fluctuate": _cmd_fluctuate,
    "limit": _cmd_limit,
}


def run(argv: Optional[list[str]] = None) -> int:
    """Parse arguments, dispatch, and return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        tol = DEFAULT_TOL if args.tol is None else Tolerance(rel=args.tol)
        return _COMMANDS[args.command](args, tol)
    except (DomainSectionError, AxiomRefusalError) as exc:
        print(f"check failed: {exc}")
        report = getattr(exc, "report", None)
        if report is not None:
            for c in report.checks:
                if not c.advisory and not c.passed:
                    print(f"  FAIL  {c.axiom_id:<38}  "
                          f"residual {c.residual:.3e}")
        return 1
    except (InputError, ShapeError, NcgError) as exc:
        print(f"input error: {exc}")
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
