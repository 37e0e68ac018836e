"""Command-line front end: check, infer, eval and ast over .shp source files.

Exit codes: 0 success; 1 a checked annotation was rejected; 2 syntax, scope,
annotation or match-restriction errors; 3 inference gave up (degree cap,
budget, non-shapely observation, node search); 4 runtime evaluation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import checker, inference, semantics, syntax, typesys

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_BAD_INPUT = 2
EXIT_INFERENCE_FAILED = 3
EXIT_RUNTIME = 4


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliFailure(EXIT_BAD_INPUT, f"cannot read {path}: {exc}") from None


def load_program(path: str) -> syntax.Program:
    """Parse, scope-check, desugar and validate the match restriction."""
    text = _read_source(path)
    try:
        program = syntax.parse_program(text)
        syntax.scope_check(program)
    except (syntax.ParseError, syntax.ScopeError) as exc:
        raise CliFailure(EXIT_BAD_INPUT, str(exc)) from None
    program = syntax.desugar(program)
    violations = syntax.validate_restriction(program)
    if violations:
        lines = "\n".join(str(v) for v in violations)
        raise CliFailure(EXIT_BAD_INPUT, f"match restriction violated:\n{lines}")
    return program


def _emit(record: dict, args: argparse.Namespace, text: str) -> None:
    if args.format == "structured":
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def cmd_check(args: argparse.Namespace) -> int:
    program = load_program(args.file)
    try:
        result = checker.check_program(program)
    except (checker.CheckError, typesys.AnnotationError, typesys.UnificationFailure) as exc:
        raise CliFailure(EXIT_BAD_INPUT, str(exc)) from None
    for fn_result in result.results:
        for warning in fn_result.warnings:
            _emit({"kind": "warning", "function": fn_result.function, "message": warning},
                  args, f"warning: {warning}")
        for ob, verdict in fn_result.obligations:
            record = {
                "kind": "obligation",
                "function": ob.function,
                "rule": ob.rule,
                "line": ob.pos[0],
                "col": ob.pos[1],
                "constraints": checker.format_constraints(ob.constraints),
                "goal": str(ob.goal),
                "verdict": verdict,
            }
            _emit(record, args,
                  f"[{ob.function} {ob.pos[0]}:{ob.pos[1]} {ob.rule}] "
                  f"{ob} : {verdict.upper()}")
        summary = "accepted" if fn_result.accepted else "rejected"
        _emit({"kind": "summary", "function": fn_result.function,
               "accepted": fn_result.accepted},
              args, f"{fn_result.function}: {summary}")
    return EXIT_OK if result.accepted else EXIT_REJECTED


def _level_records(fi: inference.FunctionInference) -> list[dict]:
    records = []
    for attempt in fi.attempts:
        for level in attempt.levels:
            records.append({
                "kind": "level",
                "function": fi.function,
                "degree": attempt.degree,
                "level": level.level,
                "nodes": [list(n) for n in level.nodes.nodes],
                "rows": [[list(node), ["?" if v is None else v for v in measured]]
                         for node, measured in level.rows],
                "polynomial": str(level.polynomial),
                "evaluations": level.evaluations,
            })
        records.append({
            "kind": "attempt",
            "function": fi.function,
            "degree": attempt.degree,
            "incomplete": attempt.incomplete,
            "accepted": attempt.accepted,
        })
    return records


def _measurement_table(fi: inference.FunctionInference) -> str:
    lines = []
    for attempt in fi.attempts:
        status = ("accepted" if attempt.accepted
                  else "incomplete" if attempt.incomplete else "rejected")
        lines.append(f"  degree {attempt.degree}: {status}")
        for level in attempt.levels:
            lines.append(f"    level {level.level}: {level.polynomial} "
                         f"({level.evaluations} evaluations)")
            header = " ".join(level.nodes.variables) or "-"
            lines.append(f"      {header} | sizes")
            for node, measured in level.rows:
                cells = " ".join(str(c) for c in node) or "-"
                sizes = " ".join("?" if v is None else str(v) for v in measured)
                lines.append(f"      {cells} | {sizes}")
    return "\n".join(lines)


def cmd_infer(args: argparse.Namespace) -> int:
    program = load_program(args.file)
    config = inference.InferenceConfig(
        start_degree=args.start_degree, max_degree=args.max_degree,
        step_budget=args.budget, seed=args.seed,
        debug_assertions=args.debug_assert)
    try:
        engine = inference.Inferencer(program, config)
    except (typesys.UnificationFailure, typesys.AnnotationError,
            inference.UnsupportedShape) as exc:
        raise CliFailure(EXIT_BAD_INPUT, str(exc)) from None
    results: list[inference.FunctionInference] = []
    try:
        for f in program.functions:
            results.append(engine.try_increasing_degrees(f.name))
    except inference.DegreeCapExceeded as exc:
        _report_inferred(results, args)
        detail = f"{exc}"
        if exc.last_result is not None:
            failed = "; ".join(str(ob) for ob in exc.last_result.failed()[:3])
            if failed:
                detail += f"; last failing obligations: {failed}"
        _emit({"kind": "failure", "function": exc.function, "error": detail},
              args, f"inference failed: {detail}")
        return EXIT_INFERENCE_FAILED
    except (semantics.BudgetExhausted, semantics.NonShapelyObservation,
            inference.NodeSearchExhausted, inference.UnsupportedShape) as exc:
        _report_inferred(results, args)
        _emit({"kind": "failure", "error": f"{type(exc).__name__}: {exc}"},
              args, f"inference failed: {type(exc).__name__}: {exc}")
        return EXIT_INFERENCE_FAILED
    _report_inferred(results, args, verbose=args.verbose)
    return EXIT_OK


def _report_inferred(results: list[inference.FunctionInference],
                     args: argparse.Namespace, verbose: bool = False) -> None:
    for fi in results:
        if args.format == "structured":
            for record in _level_records(fi):
                print(json.dumps(record, sort_keys=True))
            print(json.dumps({"kind": "type", "function": fi.function,
                              "type": str(fi.inferred)}, sort_keys=True))
        else:
            print(f"{fi.function} : {fi.inferred}")
            if verbose:
                print(_measurement_table(fi))


def cmd_eval(args: argparse.Namespace) -> int:
    program = load_program(args.file)
    closures = semantics.closures_from_program(program)
    if program.externs:
        for helper in inference.inhabitant_support_defs():
            closures.funs[helper.name] = (helper.params, helper.body)
        for name, ftype in program.externs:
            inhabitant = inference.synthesize_inhabitant(name, ftype)
            closures.funs[name] = (inhabitant.params, inhabitant.body)
    heap = semantics.Heap()
    try:
        if args.function is not None:
            arg_values = [semantics.parse_value_literal(text, heap) for text in args.args]
            if args.function not in closures.funs:
                raise CliFailure(EXIT_BAD_INPUT, f"no function named {args.function!r}")
            value, heap = semantics.run_function(
                closures, args.function, arg_values, heap,
                budget=args.budget, debug=args.debug_assert)
        else:
            if program.main is None:
                raise CliFailure(EXIT_BAD_INPUT,
                                 "no function name given and the file has no main expression")
            value, heap = semantics.evaluate(program.main, {}, heap, closures,
                                             budget=args.budget, debug=args.debug_assert)
    except semantics.ValueSyntaxError as exc:
        raise CliFailure(EXIT_BAD_INPUT, str(exc)) from None
    except semantics.EvalError as exc:
        raise CliFailure(EXIT_RUNTIME, f"{type(exc).__name__}: {exc}") from None
    literal = semantics.value_to_literal(value, heap)
    _emit({"kind": "value", "value": literal}, args, literal)
    return EXIT_OK


def cmd_ast(args: argparse.Namespace) -> int:
    program = load_program(args.file)
    if args.format == "structured":
        for f in program.functions:
            print(json.dumps({"kind": "function", "name": f.name,
                              "params": list(f.params),
                              "annotation": None if f.declared_type is None
                              else str(f.declared_type),
                              "body": syntax.expr_to_source(f.body)}, sort_keys=True))
        if program.main is not None:
            print(json.dumps({"kind": "main",
                              "body": syntax.expr_to_source(program.main)}, sort_keys=True))
    else:
        print(syntax.to_source(program), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sizetypes",
        description="Check and infer list-size annotations for .shp programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="source file, or - for stdin")
        p.add_argument("--format", choices=("text", "structured"), default="text")
        p.add_argument("--debug-assert", action="store_true",
                       help="enable sharing and heap assertions during evaluation")

    p_check = sub.add_parser("check", help="type-check every annotated function")
    common(p_check)
    p_check.set_defaults(handler=cmd_check)

    p_infer = sub.add_parser("infer", help="infer size-annotated types by testing")
    common(p_infer)
    p_infer.add_argument("--max-degree", type=int, default=6)
    p_infer.add_argument("--start-degree", type=int, default=0)
    p_infer.add_argument("--budget", type=int, default=10_000_000,
                         help="evaluation step budget per test run")
    p_infer.add_argument("--seed", type=int, default=42)
    p_infer.add_argument("--verbose", action="store_true",
                         help="print measurement tables")
    p_infer.set_defaults(handler=cmd_infer)

    p_eval = sub.add_parser("eval", help="evaluate a function on value literals")
    common(p_eval)
    p_eval.add_argument("function", nargs="?", default=None)
    p_eval.add_argument("args", nargs="*", help='value literals like 7 or "[1,2,3]"')
    p_eval.add_argument("--budget", type=int, default=10_000_000)
    p_eval.set_defaults(handler=cmd_eval)

    p_ast = sub.add_parser("ast", help="print the desugared core program")
    common(p_ast)
    p_ast.set_defaults(handler=cmd_ast)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CliFailure as failure:
        print(f"error: {failure}", file=sys.stderr)
        return failure.code


if __name__ == "__main__":
    sys.exit(main())
