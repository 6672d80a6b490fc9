"""Command-line front end: check, query, classify, export.

Thin dispatch over the library. Results go to standard output,
diagnostics to standard error, so output composes in shell pipelines.
Exit codes: 0 success, 1 diagnostics with errors, 2 usage error,
3 query failure (impossible evidence or oversized enumeration).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .causal import QueryMode, counterfactual_query, interventional_query
from .errors import IdiomBNError, ImpossibleEvidenceError, TooLargeError
from .idioms import suggest_idiom
from .inference import posterior
from .lint import coverage, lint
from .modelfile import LoadResult, document_to_json, export_dot, load_model

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_QUERY = 3


def _read_model(path: str, stderr) -> Optional[LoadResult]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=stderr)
        return None
    return load_model(text)


def _print_diagnostics(result: LoadResult, stderr, as_json: bool) -> None:
    if as_json:
        payload = [
            {
                "severity": d.severity,
                "line": d.line,
                "column": d.column,
                "code": d.code,
                "message": d.message,
            }
            for d in result.diagnostics
        ]
        print(json.dumps({"diagnostics": payload}, indent=2), file=stderr)
    else:
        for d in result.diagnostics:
            print(str(d), file=stderr)


def _parse_assignments(pairs: Sequence[str], flag: str, stderr) -> Optional[dict]:
    out = {}
    for pair in pairs:
        name, sep, state = pair.partition("=")
        if not sep or not name or not state:
            print(f"{flag} expects VAR=state, got {pair!r}", file=stderr)
            return None
        out[name] = state
    return out


def cmd_check(args, stdout, stderr) -> int:
    result = _read_model(args.file, stderr)
    if result is None:
        return EXIT_USAGE
    if result.net is None:
        _print_diagnostics(result, stderr, args.json)
        return EXIT_FINDINGS
    report = lint(result.net, idiom_instances=result.instances)
    if args.json:
        payload = json.loads(report.to_json())
        payload["diagnostics"] = [
            {
                "severity": d.severity,
                "line": d.line,
                "column": d.column,
                "code": d.code,
                "message": d.message,
            }
            for d in result.diagnostics
        ]
        print(json.dumps(payload, indent=2), file=stderr)
    else:
        _print_diagnostics(result, stderr, False)
        if report.findings:
            print(report.to_text(), file=stderr)
    has_errors = bool(report.errors) or any(
        d.severity == "error" for d in result.diagnostics
    )
    has_warnings = bool(report.warnings) or any(
        d.severity == "warning" for d in result.diagnostics
    )
    if has_errors:
        return EXIT_FINDINGS
    if has_warnings and not args.no_warn:
        return EXIT_FINDINGS
    return EXIT_OK


def cmd_query(args, stdout, stderr) -> int:
    if args.counterfactual and not args.do:
        print("--counterfactual requires --do", file=stderr)
        return EXIT_USAGE
    evidence = _parse_assignments(args.evidence or [], "--evidence", stderr)
    if evidence is None:
        return EXIT_USAGE
    intervention = _parse_assignments(args.do or [], "--do", stderr)
    if intervention is None:
        return EXIT_USAGE

    result = _read_model(args.file, stderr)
    if result is None:
        return EXIT_USAGE
    if result.net is None:
        _print_diagnostics(result, stderr, args.json)
        return EXIT_FINDINGS

    if intervention and args.counterfactual:
        mode = QueryMode.COUNTERFACTUAL
    elif intervention:
        mode = QueryMode.INTERVENTIONAL
    else:
        mode = QueryMode.OBSERVATIONAL

    distributions = {}
    try:
        for target in args.target:
            if mode is QueryMode.OBSERVATIONAL:
                dist = posterior(result.net, target, evidence)
            elif mode is QueryMode.INTERVENTIONAL:
                dist = interventional_query(
                    result.net, target, intervention, evidence
                ).distribution
            else:
                dist = counterfactual_query(
                    result.net, evidence, intervention, target
                ).distribution
            distributions[target] = dist
    except (ImpossibleEvidenceError, TooLargeError) as exc:
        print(str(exc), file=stderr)
        return EXIT_QUERY
    except (IdiomBNError, ValueError) as exc:
        print(str(exc), file=stderr)
        return EXIT_USAGE

    if args.json:
        payload = {
            "mode": mode.value,
            "evidence": evidence,
            "do": intervention,
            "targets": {
                name: {s: p for s, p in zip(d.states, d.probs)}
                for name, d in distributions.items()
            },
        }
        print(json.dumps(payload, indent=2), file=stdout)
    else:
        for name, dist in distributions.items():
            rendered = " ".join(
                f"{state}={prob:.6f}" for state, prob in zip(dist.states, dist.probs)
            )
            print(f"{name}: {rendered}", file=stdout)
    return EXIT_OK


def cmd_classify(args, stdout, stderr) -> int:
    result = _read_model(args.file, stderr)
    if result is None:
        return EXIT_USAGE
    if result.net is None:
        _print_diagnostics(result, stderr, False)
        return EXIT_FINDINGS
    net = result.net
    if not net.variables:
        return EXIT_OK
    report = coverage(net, result.instances)
    if not report.uncovered:
        print("no suggestions", file=stdout)
        return EXIT_OK

    # weakly connected components of the uncovered subgraph
    neighbors: dict[str, set[str]] = {}
    for parent, child in report.uncovered:
        neighbors.setdefault(parent, set()).add(child)
        neighbors.setdefault(child, set()).add(parent)
    seen: set[str] = set()
    decl = net._decl_index
    for start in sorted(neighbors, key=decl.__getitem__):
        if start in seen:
            continue
        component = {start}
        queue = [start]
        while queue:
            for other in neighbors[queue.pop()]:
                if other not in component:
                    component.add(other)
                    queue.append(other)
        seen |= component
        ordered = sorted(component, key=decl.__getitem__)
        group = [(name, net.variable(name).role) for name in ordered]
        ranking = suggest_idiom(group)
        names = ", ".join(ordered)
        ranked = ", ".join(t.value for t in ranking)
        print(f"group {names}: {ranked}", file=stdout)
    return EXIT_OK


def cmd_export(args, stdout, stderr) -> int:
    result = _read_model(args.file, stderr)
    if result is None:
        return EXIT_USAGE
    if result.net is None:
        _print_diagnostics(result, stderr, False)
        return EXIT_FINDINGS
    if args.json:
        print(document_to_json(result.document), file=stdout)
    else:
        print(export_dot(result.net, result.instances), file=stdout, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idiombn",
        description="Build, lint, and query idiom-based Bayesian network models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse, elaborate, and lint a model")
    check.add_argument("file")
    check.add_argument("--json", action="store_true", help="JSON report")
    check.add_argument(
        "--no-warn", action="store_true",
        help="warnings do not affect the exit code",
    )
    check.set_defaults(func=cmd_check)

    query = sub.add_parser("query", help="posterior distributions")
    query.add_argument("file")
    query.add_argument("--target", action="append", required=True)
    query.add_argument("--evidence", action="append", metavar="VAR=state")
    query.add_argument("--do", action="append", metavar="VAR=state")
    query.add_argument("--counterfactual", action="store_true")
    query.add_argument("--json", action="store_true")
    query.set_defaults(func=cmd_query)

    classify = sub.add_parser(
        "classify", help="suggest idioms for variable groups not covered by one"
    )
    classify.add_argument("file")
    classify.set_defaults(func=cmd_classify)

    export = sub.add_parser("export", help="DOT or JSON export")
    export.add_argument("file")
    fmt = export.add_mutually_exclusive_group(required=True)
    fmt.add_argument("--dot", action="store_true")
    fmt.add_argument("--json", action="store_true")
    export.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args, stdout, stderr)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
