"""Test-based inference of size polynomials.

For each unknown output size, pick interpolation nodes whose geometry
guarantees a unique interpolating polynomial of the guessed degree, run the
function at inputs of exactly those sizes, solve the resulting linear system
exactly, and hand the candidate type to the checker.  The guessed degree
starts at zero and grows until the checker accepts.

Node placement follows the classic inductive hyperplane construction: for k
variables and degree d, d+1 parallel hyperplanes carry sub-configurations of
degrees d, d-1, ..., 0.  Nodes where an already-derived outer size vanishes
are skipped, since the corresponding inner lists would not exist.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb, lcm
from typing import Iterator, Optional, Sequence

from . import checker, semantics, syntax
from .poly import Polynomial, ZERO
from .semantics import Heap, IntVal, Value, closures_from_program, evaluate, measure_sizes
from .typesys import (
    AnnotatedTemplate, FirstOrderType, IntType, ListType, SizedType, TypeVar,
    annotate_with_variables, underlying_analysis,
)


class InferenceError(Exception):
    pass


class NodeSearchExhausted(InferenceError):
    def __init__(self, bound: int):
        super().__init__(f"no admissible node configuration within bound {bound}")
        self.bound = bound


class SingularSystem(InferenceError):
    """The interpolation system had no unique solution; a node-placement bug."""


class IncompleteMeasurement(InferenceError):
    """A needed level was unobservable; the current hypothesis is already wrong."""

    def __init__(self, level: int, node: tuple[int, ...]):
        super().__init__(f"no lists observable at level {level} for input sizes {node}")
        self.level = level
        self.node = node


class UnsupportedShape(InferenceError):
    pass


class DegreeCapExceeded(InferenceError):
    def __init__(self, function: str, max_degree: int,
                 last_candidate: Optional[FirstOrderType],
                 last_result: Optional[checker.CheckResult],
                 attempts: list["DegreeAttempt"]):
        self.function = function
        self.max_degree = max_degree
        self.last_candidate = last_candidate
        self.last_result = last_result
        self.attempts = attempts
        super().__init__(f"{function}: no candidate accepted up to degree {max_degree}"
                         f" ({self.cause()})")

    def cause(self) -> str:
        if any(a.incomplete for a in self.attempts):
            return ("some measurements stayed incomplete; the true size dependency "
                    "may have higher degree or not be a polynomial")
        return ("every interpolant was rejected by the checker; the dependency may "
                "have higher degree, not be a polynomial, or fall outside what the "
                "checker can certify")


@dataclass(frozen=True)
class InferenceConfig:
    start_degree: int = 0
    max_degree: int = 6
    step_budget: Optional[int] = 10_000_000
    seed: int = 42
    growth_limit: int = 6  # doublings of the node-search bound
    debug_assertions: bool = False

    def __post_init__(self) -> None:
        if self.start_degree < 0 or self.max_degree < 0:
            raise ValueError("degrees must be non-negative")
        if self.start_degree > self.max_degree:
            raise ValueError("start_degree must not exceed max_degree")
        if self.step_budget is not None and self.step_budget < 1:
            raise ValueError("the step budget must be at least 1")


# -- node configurations -----------------------------------------------------------


def required_measurements(degree: int, dimension: int) -> int:
    """Number of coefficients of a polynomial of the given total degree."""
    if degree < 0 or dimension < 0:
        raise ValueError("degree and dimension must be non-negative")
    return comb(degree + dimension, dimension)


@dataclass(frozen=True)
class NodeConfiguration:
    variables: tuple[str, ...]
    degree: int
    nodes: tuple[tuple[int, ...], ...]
    # For k >= 2: (first-coordinate value, sub-configuration) per hyperplane,
    # carrying degrees d, d-1, ..., 0 in order.
    hyperplanes: tuple[tuple[int, "NodeConfiguration"], ...] = ()


def nca_nodes(variables: Sequence[str], degree: int,
              exclusions: Sequence[Polynomial] = (),
              bound: Optional[int] = None) -> NodeConfiguration:
    """Interpolation nodes avoiding the zero sets of the exclusion polynomials.

    The default search bound, the sum of the exclusion degrees plus the target
    degree, always suffices in two dimensions; callers may retry with a larger
    bound in higher dimensions.
    """
    variables = tuple(variables)
    if bound is None:
        bound = sum(e.total_degree() for e in exclusions) + degree
    for e in exclusions:
        if e.is_zero:
            raise NodeSearchExhausted(bound)
    return _build_nodes(variables, degree, list(exclusions), bound)


def _build_nodes(variables: tuple[str, ...], degree: int,
                 exclusions: list[Polynomial], bound: int) -> NodeConfiguration:
    if not variables:
        if any(e.evaluate({}) == 0 for e in exclusions):
            raise NodeSearchExhausted(bound)
        return NodeConfiguration((), degree, ((),))
    if len(variables) == 1:
        var = variables[0]
        picked: list[int] = []
        for z in range(bound + 1):
            if all(e.evaluate({var: z}) != 0 for e in exclusions):
                picked.append(z)
                if len(picked) == degree + 1:
                    break
        else:
            raise NodeSearchExhausted(bound)
        return NodeConfiguration(variables, degree, tuple((z,) for z in picked))

    first, rest = variables[0], variables[1:]
    needed = list(range(degree, -1, -1))
    planes: list[tuple[int, NodeConfiguration]] = []
    nodes: list[tuple[int, ...]] = []
    for c in range(bound + 1):
        if not needed:
            break
        point = Polynomial.constant(c)
        restricted = [e.substitute({first: point}) for e in exclusions]
        if any(r.is_zero for r in restricted):
            continue  # a root hyperplane of some exclusion
        try:
            sub = _build_nodes(rest, needed[0], restricted, bound)
        except NodeSearchExhausted:
            continue
        planes.append((c, sub))
        nodes.extend((c,) + n for n in sub.nodes)
        needed.pop(0)
    if needed:
        raise NodeSearchExhausted(bound)
    return NodeConfiguration(variables, degree, tuple(nodes), tuple(planes))


# -- exact interpolation -------------------------------------------------------------


def monomial_basis(degree: int, variables: Sequence[str]) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree <= degree, graded lexicographic."""
    k = len(variables)
    if k == 0:
        return [()]
    out = [exps
           for total in range(degree + 1)
           for exps in _compositions(total, k)]
    return out


def _compositions(total: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, k - 1):
            yield (head,) + tail


def solve_exact_linear(matrix: Sequence[Sequence[int]],
                       rhs: Sequence[Fraction | int]) -> Optional[list[Fraction]]:
    """Solve a square integer system exactly; None when singular.

    Fraction-free (Bareiss) forward elimination keeps all intermediates as
    integers, so large systems stay fast; back substitution happens over
    rationals.
    """
    n = len(matrix)
    denom = lcm(*(Fraction(v).denominator for v in rhs)) if rhs else 1
    aug = [[int(x) for x in row] + [int(Fraction(rhs[i]) * denom)]
           for i, row in enumerate(matrix)]
    prev = 1
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot_row is None:
            return None
        if pivot_row != col:
            aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        for r in range(col + 1, n):
            row = aug[r]
            factor = row[col]
            for c in range(col + 1, n + 1):
                row[c] = (row[c] * pivot - factor * aug[col][c]) // prev
            row[col] = 0
        prev = pivot
    solution: list[Fraction] = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(aug[i][n])
        for j in range(i + 1, n):
            acc -= aug[i][j] * solution[j]
        solution[i] = acc / aug[i][i]
    return [x / denom for x in solution]


def derive_polynomial(degree: int, variables: Sequence[str],
                      nodes: Sequence[tuple[int, ...]],
                      values: Sequence[Fraction | int]) -> Polynomial:
    """The unique polynomial of the given total degree through the data points."""
    variables = tuple(variables)
    basis = monomial_basis(degree, variables)
    if len(nodes) != len(basis) or len(values) != len(basis):
        raise ValueError(
            f"need exactly {len(basis)} nodes and values for degree {degree} in "
            f"{len(variables)} variable(s), got {len(nodes)} and {len(values)}")
    matrix = [[_power_product(node, exps) for exps in basis] for node in nodes]
    coeffs = solve_exact_linear(matrix, list(values))
    if coeffs is None:
        raise SingularSystem(
            "interpolation system is singular; the nodes do not pin down a unique "
            f"degree-{degree} polynomial")
    terms = {}
    for exps, coeff in zip(basis, coeffs):
        mono = tuple((v, e) for v, e in zip(variables, exps) if e)
        terms[mono] = coeff
    return Polynomial(terms)


def _power_product(node: tuple[int, ...], exps: tuple[int, ...]) -> int:
    out = 1
    for base, e in zip(node, exps):
        out *= base ** e
    return out


# -- test-input construction -----------------------------------------------------------


def generate_input(param_type: SizedType, sizes: dict[str, int], heap: Heap,
                   element_source: Iterator[int]) -> Value:
    """A concrete value of exactly the demanded sizes.

    List leaves of type-variable or Int type take successive integers from
    `element_source`; a parameter that is itself an integer is fixed at 1,
    since no size depends on it.
    """
    if isinstance(param_type, IntType):
        return IntVal(1)
    return _generate(param_type, sizes, heap, element_source)


def _generate(t: SizedType, sizes: dict[str, int], heap: Heap,
              element_source: Iterator[int]) -> Value:
    if isinstance(t, (IntType, TypeVar)):
        return IntVal(next(element_source))
    assert isinstance(t, ListType)
    var = t.size.single_variable()
    if var is None or var not in sizes:
        raise ValueError(f"list annotation {t.size} is not a sized input variable")
    items = [_generate(t.elem, sizes, heap, element_source) for _ in range(sizes[var])]
    acc: Value = semantics.NULL
    for item in reversed(items):
        acc = heap.alloc(item, acc)
    return acc


# -- reports ---------------------------------------------------------------------------


@dataclass
class LevelReport:
    level: int
    degree: int
    nodes: NodeConfiguration
    rows: list[tuple[tuple[int, ...], tuple[Optional[int], ...]]]
    polynomial: Polynomial
    evaluations: int


@dataclass
class DegreeAttempt:
    degree: int
    levels: list[LevelReport]
    candidate: Optional[FirstOrderType]
    check_result: Optional[checker.CheckResult]
    incomplete: bool = False

    @property
    def accepted(self) -> bool:
        return self.check_result is not None and self.check_result.accepted


@dataclass
class FunctionInference:
    function: str
    inferred: FirstOrderType
    attempts: list[DegreeAttempt]

    @property
    def final_attempt(self) -> DegreeAttempt:
        return self.attempts[-1]


@dataclass
class ProgramInference:
    results: list[FunctionInference]
    signature: dict[str, FirstOrderType]


# -- the inference engine ---------------------------------------------------------------


class Inferencer:
    """Inference over one core-form, scope-checked, restriction-valid program."""

    def __init__(self, program: syntax.Program, config: InferenceConfig = InferenceConfig()):
        self.program = program
        self.config = config
        self.analysis = underlying_analysis(program, use_declared=False)
        self.sigma: dict[str, FirstOrderType] = {}
        self.closures = closures_from_program(program)
        if program.externs:
            for helper in inhabitant_support_defs():
                self.closures.funs[helper.name] = (helper.params, helper.body)
        for name, ftype in program.externs:
            self.sigma[name] = ftype
            inhabitant = synthesize_inhabitant(name, ftype)
            self.closures.funs[name] = (inhabitant.params, inhabitant.body)

    # .. measurement ....................................................................

    def _measure_node(self, fundef: syntax.FunDef, template: AnnotatedTemplate,
                      node: tuple[int, ...], depth: int) -> tuple[Optional[int], ...]:
        sizes = dict(zip(template.input_vars, node))
        heap = Heap()
        element_source = itertools.count(self.config.seed)
        store = {
            name: generate_input(ptype, sizes, heap, element_source)
            for name, ptype in zip(fundef.params, template.params)
        }
        value, heap = evaluate(fundef.body, store, heap, self.closures,
                               budget=self.config.step_budget,
                               debug=self.config.debug_assertions)
        return measure_sizes(value, heap, depth)

    def _nodes_with_growth(self, variables: tuple[str, ...], degree: int,
                           exclusions: list[Polynomial]) -> NodeConfiguration:
        bound = sum(e.total_degree() for e in exclusions) + degree
        for _ in range(self.config.growth_limit + 1):
            try:
                return nca_nodes(variables, degree, exclusions, bound)
            except NodeSearchExhausted:
                bound = max(2 * bound, 1)
        raise NodeSearchExhausted(bound)

    def get_size_aware_type(self, degree: int, fname: str,
                            template: AnnotatedTemplate
                            ) -> tuple[FirstOrderType, list[LevelReport]]:
        """Derive all output polynomials at a fixed degree, outermost first.

        Nodes for level j avoid the zero sets of the polynomials already
        derived for levels 1..j-1; once some level is constant zero, all
        deeper levels are zero as well (no such lists ever exist, so any
        annotation below is equivalent).
        """
        fundef = self.program.function(fname)
        depth = template.output_depth
        polys: list[Polynomial] = []
        levels: list[LevelReport] = []
        for level in range(1, depth + 1):
            if polys and polys[-1].is_zero:
                polys.append(ZERO)
                continue
            nodes = self._nodes_with_growth(template.input_vars, degree, list(polys))
            rows = []
            values: list[int] = []
            for node in nodes.nodes:
                measured = self._measure_node(fundef, template, node, depth)
                rows.append((node, measured))
                observed = measured[level - 1]
                if observed is None:
                    raise IncompleteMeasurement(level, node)
                values.append(observed)
            if all(v == 0 for v in values):
                poly = ZERO
            else:
                poly = derive_polynomial(degree, template.input_vars, nodes.nodes, values)
            polys.append(poly)
            levels.append(LevelReport(level, degree, nodes, rows, poly, len(nodes.nodes)))
        return template.first_order(polys), levels

    # .. the degree loop ................................................................

    def _check_candidate(self, fname: str, candidate: FirstOrderType) -> checker.CheckResult:
        fundef = replace(self.program.function(fname), declared_type=candidate)
        sigma = dict(self.sigma)
        sigma[fname] = candidate
        return checker.check_function(fundef, sigma, self.analysis.nil_types[fname])

    def try_increasing_degrees(self, fname: str) -> FunctionInference:
        template = annotate_with_variables(self.analysis.types[fname])
        attempts: list[DegreeAttempt] = []
        if template.output_depth == 0:
            candidate = template.first_order([])
            result = self._check_candidate(fname, candidate)
            attempts.append(DegreeAttempt(0, [], candidate, result))
            if result.accepted:
                return FunctionInference(fname, candidate, attempts)
            raise DegreeCapExceeded(fname, self.config.max_degree, candidate, result, attempts)
        for degree in range(self.config.start_degree, self.config.max_degree + 1):
            try:
                candidate, levels = self.get_size_aware_type(degree, fname, template)
            except IncompleteMeasurement:
                attempts.append(DegreeAttempt(degree, [], None, None, incomplete=True))
                continue
            result = self._check_candidate(fname, candidate)
            attempts.append(DegreeAttempt(degree, levels, candidate, result))
            if result.accepted:
                self.sigma[fname] = candidate
                return FunctionInference(fname, candidate, attempts)
        last = attempts[-1] if attempts else None
        raise DegreeCapExceeded(fname, self.config.max_degree,
                                last.candidate if last else None,
                                last.check_result if last else None, attempts)

    def infer_all(self) -> ProgramInference:
        results = [self.try_increasing_degrees(f.name) for f in self.program.functions]
        return ProgramInference(results, dict(self.sigma))


# -- inhabitants for extern types ----------------------------------------------------------

_MULT = "$mult"
_LENGTH = "$length"
_GEN = "$gen"


def inhabitant_support_defs() -> list[syntax.FunDef]:
    """Multiplication, list length and list generation, in the language itself."""
    mult = syntax.FunDef(_MULT, ("x", "y"), syntax.parse_expr(
        "if x then y + mult_(x - 1, y) else 0"))
    length = syntax.FunDef(_LENGTH, ("l",), syntax.parse_expr(
        "match l with | nil -> 0 | cons(h, t) -> len_(t) + 1"))
    gen = syntax.FunDef(_GEN, ("z", "x"), syntax.parse_expr(
        "if x then cons(z, gen_(z, x - 1)) else nil"))
    renames = {"mult_": _MULT, "len_": _LENGTH, "gen_": _GEN}
    defs = [replace(f, body=_rename_calls(f.body, renames)) for f in (mult, length, gen)]
    return [replace(f, body=syntax._desugar_body(f.body)) for f in defs]


def _rename_calls(e: syntax.Expr, renames: dict[str, str]) -> syntax.Expr:
    if isinstance(e, syntax.FunApp):
        return syntax.FunApp(renames.get(e.fname, e.fname),
                             tuple(_rename_calls(a, renames) for a in e.args), pos=e.pos)
    if isinstance(e, syntax.BinOp):
        return syntax.BinOp(e.op, _rename_calls(e.left, renames),
                            _rename_calls(e.right, renames), pos=e.pos)
    if isinstance(e, syntax.Cons):
        return syntax.Cons(_rename_calls(e.head, renames),
                           _rename_calls(e.tail, renames), pos=e.pos)
    if isinstance(e, syntax.Let):
        return syntax.Let(e.name, _rename_calls(e.bound, renames),
                          _rename_calls(e.body, renames), pos=e.pos)
    if isinstance(e, syntax.If):
        return syntax.If(_rename_calls(e.cond, renames), _rename_calls(e.then, renames),
                         _rename_calls(e.orelse, renames), pos=e.pos)
    if isinstance(e, syntax.Match):
        return syntax.Match(e.scrutinee, e.head_name, e.tail_name,
                            _rename_calls(e.nil_branch, renames),
                            _rename_calls(e.cons_branch, renames), pos=e.pos)
    return e


def synthesize_inhabitant(name: str, ftype: FirstOrderType) -> syntax.FunDef:
    """A function body realizing the size dependency of an extern type.

    The body measures the lengths of its list parameters, evaluates the
    declared output polynomials with generated integer arithmetic, and builds
    nested lists of exactly those sizes.  Whenever the declared outer size
    vanishes on empty inputs, empty inputs map to the empty list, as any total
    polymorphic function must.  Element values are copied from an available
    head, falling back to the integer 1.
    """
    params = tuple(f"x{i + 1}" for i in range(len(ftype.params)))

    # Output polynomials, outermost first, and the element below them.
    polys: list[Polynomial] = []
    result = ftype.result
    while isinstance(result, ListType):
        polys.append(result.size)
        result = result.elem
    if not polys:
        return syntax.FunDef(name, params, syntax.IntConst(1))

    # Only sizes of depth-1 list parameters can be measured in-language.
    length_var: dict[str, str] = {}
    deep_vars: set[str] = set()
    for pname, ptype in zip(params, ftype.params):
        if isinstance(ptype, ListType):
            var = ptype.size.single_variable()
            if var is not None and var not in length_var:
                length_var[var] = pname
            inner = ptype.elem
            while isinstance(inner, ListType):
                v = inner.size.single_variable()
                if v is not None and v not in length_var:
                    deep_vars.add(v)
                inner = inner.elem
    needed = set().union(*(p.variables() for p in polys)) if polys else set()
    hidden = needed & deep_vars - set(length_var)
    if hidden:
        raise UnsupportedShape(
            f"{name}: sizes {sorted(hidden)} live below the outermost list of a "
            "parameter and cannot be measured in-language")

    for p in polys:
        _require_integer_valued(name, p)

    length_names = {var: f"len_{var}" for var in sorted(needed)}

    def build(elem: syntax.Expr) -> syntax.Expr:
        body: syntax.Expr = elem
        for p in reversed(polys):
            body = syntax.FunApp(_GEN, (body, _poly_to_expr(p, length_names)))
        for var in sorted(needed, reverse=True):
            body = syntax.Let(length_names[var],
                              syntax.FunApp(_LENGTH, (syntax.Var(length_var[var]),)),
                              body)
        return body

    elem_param = None
    if isinstance(result, TypeVar):
        for pname, ptype in zip(params, ftype.params):
            if isinstance(ptype, ListType) and ptype.elem == result:
                elem_param = pname
                break
    if elem_param is None:
        body = build(syntax.IntConst(1))
    else:
        body = syntax.Match(elem_param, "hd0", "tl0",
                            build(syntax.IntConst(1)), build(syntax.Var("hd0")))
    return syntax.FunDef(name, params, syntax._desugar_body(body))


def _require_integer_valued(name: str, p: Polynomial) -> None:
    variables = sorted(p.variables())
    degree = p.total_degree()
    for point in itertools.product(range(degree + 1), repeat=len(variables)):
        value = p.evaluate(dict(zip(variables, point)))
        if value.denominator != 1:
            raise UnsupportedShape(
                f"{name}: size {p} takes the non-integer value {value} at "
                f"{dict(zip(variables, point))}")


def _poly_to_expr(p: Polynomial, length_names: dict[str, str]) -> syntax.Expr:
    denom = 1
    for coeff in p.terms.values():
        denom = lcm(denom, coeff.denominator)
    scaled = p * denom
    positive: list[syntax.Expr] = []
    negative: list[syntax.Expr] = []
    for mono, coeff in sorted(scaled.terms.items()):
        c = int(coeff)
        target = positive if c > 0 else negative
        target.append(_term_expr(abs(c), mono, length_names))
    expr = _sum_expr(positive)
    if negative:
        expr = syntax.BinOp("-", expr, _sum_expr(negative))
    if denom != 1:
        expr = syntax.BinOp("div", expr, syntax.IntConst(denom))
    return expr


def _term_expr(coeff: int, mono, length_names: dict[str, str]) -> syntax.Expr:
    factors: list[syntax.Expr] = []
    for var, exp in mono:
        factors.extend(syntax.Var(length_names[var]) for _ in range(exp))
    if not factors:
        return syntax.IntConst(coeff)
    expr = factors[0]
    for f in factors[1:]:
        expr = syntax.FunApp(_MULT, (expr, f))
    if coeff != 1:
        expr = syntax.FunApp(_MULT, (syntax.IntConst(coeff), expr))
    return expr


def _sum_expr(terms: list[syntax.Expr]) -> syntax.Expr:
    if not terms:
        return syntax.IntConst(0)
    expr = terms[0]
    for t in terms[1:]:
        expr = syntax.BinOp("+", expr, t)
    return expr
