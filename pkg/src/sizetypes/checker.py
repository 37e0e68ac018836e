"""Syntax-directed type checking against declared first-order types.

Walking a function body against its declared type produces a list of
arithmetic obligations: under a constraint set D (equations p = 0 collected
from nil branches), a polynomial equality, a zero test, or an equality of
sized types must hold.  Programs that pass the match restriction only ever
put equations of the shape ``variable - constant = 0`` into D, which makes
every obligation decidable: solve D for its variables, substitute, and
compare canonical forms coefficient by coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import syntax, typesys
from .poly import Polynomial, ZERO
from .typesys import (
    FirstOrderType, IntType, INT, ListType, SizedType, TypeVar,
    free_size_vars, same_underlying, substitute_sizes, substitute_type_vars,
    type_equiv,
)


class CheckError(Exception):
    pass


class UnknownFunction(CheckError):
    def __init__(self, name: str):
        super().__init__(f"no type available for function {name!r}")
        self.name = name


class ShapeMismatch(CheckError):
    """Formal and actual underlying types disagree; an upstream inference bug."""


class OutsideFragment(CheckError):
    def __init__(self, equation: Polynomial):
        super().__init__(
            f"constraint {equation} = 0 is not of the form 'variable - constant'")
        self.equation = equation


class UndecidableObligation(CheckError):
    pass


# -- obligations -----------------------------------------------------------------


@dataclass(frozen=True)
class PolyEq:
    left: Polynomial
    right: Polynomial

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class PolyZero:
    poly: Polynomial

    def __str__(self) -> str:
        return f"{self.poly} = 0"


@dataclass(frozen=True)
class TypeEq:
    left: SizedType
    right: SizedType

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


Goal = object  # PolyEq | PolyZero | TypeEq


@dataclass(frozen=True)
class Obligation:
    constraints: tuple[Polynomial, ...]
    goal: Goal
    rule: str
    function: str
    pos: tuple[int, int]

    def __str__(self) -> str:
        return f"{format_constraints(self.constraints)} |- {self.goal}"


def format_constraints(constraints: Sequence[Polynomial]) -> str:
    if not constraints:
        return "True"
    parts = []
    for c in constraints:
        form = c.linear_var_minus_const()
        parts.append(f"{form[0]}={form[1]}" if form else f"{c}=0")
    return ", ".join(parts)


HOLDS = "holds"
FAILS = "fails"
VACUOUS = "vacuous"


# -- the decision procedure ---------------------------------------------------------


def solve_fragment(constraints: Iterable[Polynomial]) -> Optional[dict[str, Fraction]]:
    """Solve a constraint set of ``variable - constant`` equations over naturals.

    Returns the forced assignment, or None when the set is unsatisfiable
    (a variable pinned to two values, or to a negative or fractional one).
    Raises OutsideFragment for any other equation shape.
    """
    assignment: dict[str, Fraction] = {}
    for c in constraints:
        form = c.linear_var_minus_const()
        if form is None:
            raise OutsideFragment(c)
        var, value = form
        if value < 0 or value.denominator != 1:
            return None
        if var in assignment and assignment[var] != value:
            return None
        assignment[var] = value
    return assignment


def entails_poly_eq(constraints: Sequence[Polynomial], left: Polynomial,
                    right: Polynomial) -> bool:
    assignment = solve_fragment(constraints)
    if assignment is None:
        return True
    subst = {v: Polynomial.constant(c) for v, c in assignment.items()}
    return left.substitute(subst) == right.substitute(subst)


def entails_poly_zero(constraints: Sequence[Polynomial], poly: Polynomial) -> bool:
    return entails_poly_eq(constraints, poly, ZERO)


def decide_entailment(obligation: Obligation) -> bool:
    """Decide an obligation in the fragment.

    An unsatisfiable constraint set makes the obligation vacuously true;
    otherwise forced variables are substituted into the goal and the rest is
    coefficient comparison (for types, level-by-level equivalence).
    """
    return classify(obligation) in (HOLDS, VACUOUS)


def classify(obligation: Obligation) -> str:
    assignment = solve_fragment(obligation.constraints)
    if assignment is None:
        return VACUOUS
    goal = obligation.goal
    if isinstance(goal, PolyEq):
        ok = entails_poly_eq(obligation.constraints, goal.left, goal.right)
    elif isinstance(goal, PolyZero):
        ok = entails_poly_zero(obligation.constraints, goal.poly)
    elif isinstance(goal, TypeEq):
        ok = type_equiv(obligation.constraints, goal.left, goal.right)
    else:
        raise UndecidableObligation(f"unknown goal {goal!r}")
    return HOLDS if ok else FAILS


# -- Theta: matching formals against actuals -------------------------------------------


@dataclass
class ThetaResult:
    size_subst: dict[str, Polynomial]
    type_subst: dict[str, SizedType]
    equations: list[tuple[Polynomial, Polynomial]]

    def apply(self, t: SizedType) -> SizedType:
        return substitute_sizes(substitute_type_vars(t, self.type_subst), self.size_subst)


def theta(formals: Sequence[SizedType], actuals: Sequence[SizedType]) -> ThetaResult:
    """Match formal parameter types (bare-variable sizes) against actual types.

    Size variables map to the actual polynomials; type variables bind to the
    actual element types.  When two actuals meet the same formal variable the
    pair of polynomials is recorded as an equation to be proved.
    """
    result = ThetaResult({}, {}, [])
    if len(formals) != len(actuals):
        raise ShapeMismatch(f"arity mismatch: {len(formals)} formals, {len(actuals)} actuals")

    def match_types(bound: SizedType, actual: SizedType) -> None:
        # A repeated type variable: sizes inside the two actuals must agree.
        if isinstance(bound, ListType) and isinstance(actual, ListType):
            result.equations.append((bound.size, actual.size))
            match_types(bound.elem, actual.elem)
        elif type(bound) is not type(actual) or bound != actual:
            if not same_underlying(bound, actual):
                raise ShapeMismatch(f"type variable bound to both {bound} and {actual}")

    def go(formal: SizedType, actual: SizedType) -> None:
        if isinstance(formal, IntType):
            if not isinstance(actual, IntType):
                raise ShapeMismatch(f"expected Int, found {actual}")
        elif isinstance(formal, TypeVar):
            if formal.name in result.type_subst:
                match_types(result.type_subst[formal.name], actual)
            else:
                result.type_subst[formal.name] = actual
        else:
            assert isinstance(formal, ListType)
            if not isinstance(actual, ListType):
                raise ShapeMismatch(f"expected a list, found {actual}")
            var = formal.size.single_variable()
            if var is None:
                raise ShapeMismatch(f"formal annotation {formal.size} is not a bare variable")
            if var in result.size_subst:
                result.equations.append((result.size_subst[var], actual.size))
            else:
                result.size_subst[var] = actual.size
            go(formal.elem, actual.elem)

    for formal, actual in zip(formals, actuals):
        go(formal, actual)
    return result


# -- checking a function ------------------------------------------------------------


@dataclass
class CheckResult:
    function: str
    accepted: bool
    obligations: list[tuple[Obligation, str]]  # (obligation, holds/fails/vacuous)
    warnings: list[str]

    def failed(self) -> list[Obligation]:
        return [ob for ob, verdict in self.obligations if verdict == FAILS]


class _Checker:
    def __init__(self, fname: str, sigma: dict[str, FirstOrderType],
                 nil_types: dict[int, SizedType]):
        self.fname = fname
        self.sigma = sigma
        self.nil_types = nil_types
        self.obligations: list[Obligation] = []

    def emit(self, constraints: tuple[Polynomial, ...], goal: Goal, rule: str,
             pos: tuple[int, int]) -> None:
        for c in constraints:
            if c.linear_var_minus_const() is None:
                raise UndecidableObligation(
                    f"{self.fname}: constraint {c} = 0 outside the decidable fragment; "
                    "run the match restriction check first")
        self.obligations.append(Obligation(constraints, goal, rule, self.fname, pos))

    # .. synthesis for let-bound basic expressions ..................................

    def synth(self, e: syntax.Expr, env: dict[str, SizedType],
              constraints: tuple[Polynomial, ...]) -> SizedType:
        if isinstance(e, syntax.IntConst):
            return INT
        if isinstance(e, syntax.Var):
            return env[e.name]
        if isinstance(e, syntax.Nil):
            t = self.nil_types.get(id(e))
            if t is None:
                raise CheckError("internal: nil occurrence without an inferred shape")
            return t
        if isinstance(e, syntax.BinOp):
            self._int_operands(e, env, constraints)
            return INT
        if isinstance(e, syntax.Cons):
            assert isinstance(e.head, syntax.Var) and isinstance(e.tail, syntax.Var)
            head_t = env[e.head.name]
            tail_t = env[e.tail.name]
            if not isinstance(tail_t, ListType):
                raise CheckError(f"internal: cons onto non-list {tail_t}")
            self.emit(constraints, TypeEq(tail_t, ListType(head_t, tail_t.size)),
                      "cons", e.pos)
            return ListType(head_t, tail_t.size + 1)
        if isinstance(e, syntax.FunApp):
            return self.apply(e, env, constraints)
        raise CheckError(f"internal: {type(e).__name__} is not a basic expression")

    def apply(self, e: syntax.FunApp, env: dict[str, SizedType],
              constraints: tuple[Polynomial, ...]) -> SizedType:
        ftype = self.sigma.get(e.fname)
        if ftype is None:
            raise UnknownFunction(e.fname)
        actuals = []
        for a in e.args:
            assert isinstance(a, syntax.Var)
            actuals.append(env[a.name])
        subst = theta(ftype.params, actuals)
        for left, right in subst.equations:
            self.emit(constraints, PolyEq(left, right), "app", e.pos)
        return subst.apply(ftype.result)

    def _int_operands(self, e: syntax.BinOp, env: dict[str, SizedType],
                      constraints: tuple[Polynomial, ...]) -> None:
        for operand in (e.left, e.right):
            assert isinstance(operand, syntax.Var)
            t = env[operand.name]
            if not isinstance(t, IntType):
                self.emit(constraints, TypeEq(t, INT), "binop", e.pos)

    # .. checking against an expected type ..........................................

    def check(self, e: syntax.Expr, env: dict[str, SizedType],
              constraints: tuple[Polynomial, ...], expected: SizedType) -> None:
        if isinstance(e, syntax.IntConst):
            self.emit(constraints, TypeEq(INT, expected), "int", e.pos)
        elif isinstance(e, syntax.Var):
            self.emit(constraints, TypeEq(env[e.name], expected), "var", e.pos)
        elif isinstance(e, syntax.Nil):
            if not isinstance(expected, ListType):
                self.emit(constraints, TypeEq(self.synth(e, env, constraints), expected),
                          "nil", e.pos)
                return
            self.emit(constraints, PolyZero(expected.size), "nil", e.pos)
        elif isinstance(e, syntax.BinOp):
            self._int_operands(e, env, constraints)
            self.emit(constraints, TypeEq(INT, expected), "binop", e.pos)
        elif isinstance(e, syntax.Cons):
            assert isinstance(e.head, syntax.Var) and isinstance(e.tail, syntax.Var)
            if not isinstance(expected, ListType):
                self.emit(constraints, TypeEq(self.synth(e, env, constraints), expected),
                          "cons", e.pos)
                return
            head_t = env[e.head.name]
            tail_t = env[e.tail.name]
            if not isinstance(tail_t, ListType):
                raise CheckError(f"internal: cons onto non-list {tail_t}")
            self.emit(constraints, PolyEq(expected.size, tail_t.size + 1), "cons", e.pos)
            self.emit(constraints, TypeEq(head_t, expected.elem), "cons", e.pos)
            self.emit(constraints, TypeEq(tail_t, ListType(expected.elem, tail_t.size)),
                      "cons", e.pos)
        elif isinstance(e, syntax.FunApp):
            result = self.apply(e, env, constraints)
            self.emit(constraints, TypeEq(expected, result), "app", e.pos)
        elif isinstance(e, syntax.Let):
            bound_t = self.synth(e.bound, env, constraints)
            inner = dict(env)
            inner[e.name] = bound_t
            self.check(e.body, inner, constraints, expected)
        elif isinstance(e, syntax.If):
            assert isinstance(e.cond, syntax.Var)
            t = env[e.cond.name]
            if not isinstance(t, IntType):
                self.emit(constraints, TypeEq(t, INT), "if", e.pos)
            self.check(e.then, env, constraints, expected)
            self.check(e.orelse, env, constraints, expected)
        elif isinstance(e, syntax.Match):
            scrut_t = env[e.scrutinee]
            if not isinstance(scrut_t, ListType):
                raise CheckError(f"internal: match on non-list {scrut_t}")
            self.check(e.nil_branch, env, constraints + (scrut_t.size,), expected)
            inner = dict(env)
            inner[e.head_name] = scrut_t.elem
            inner[e.tail_name] = ListType(scrut_t.elem, scrut_t.size - 1)
            self.check(e.cons_branch, inner, constraints, expected)
        elif isinstance(e, syntax.LetFun):
            inner_def = e.fundef
            ftype = self.sigma.get(inner_def.name)
            if ftype is None:
                raise UnknownFunction(inner_def.name)
            env0 = dict(zip(inner_def.params, ftype.params))
            self.check(inner_def.body, env0, (), ftype.result)
            self.check(e.body, env, constraints, expected)
        elif isinstance(e, syntax.LetExtern):
            if e.fname not in self.sigma:
                raise UnknownFunction(e.fname)
            self.check(e.body, env, constraints, expected)
        else:
            raise CheckError(f"internal: cannot check surface node {type(e).__name__}; "
                             "run desugar first")


def check_function(fundef: syntax.FunDef, sigma: dict[str, FirstOrderType],
                   nil_types: dict[int, SizedType]) -> CheckResult:
    """Check one function body against sigma[fundef.name].

    `nil_types` gives each nil occurrence its (zero-sized) shape, as computed
    by the underlying-type pass.  The verdict is accepted iff every emitted
    obligation holds or is vacuous.
    """
    ftype = sigma.get(fundef.name)
    if ftype is None:
        raise UnknownFunction(fundef.name)
    warnings = typesys.validate_first_order_type(fundef.name, ftype)
    checker = _Checker(fundef.name, sigma, nil_types)
    env = dict(zip(fundef.params, ftype.params))
    checker.check(fundef.body, env, (), ftype.result)
    judged = [(ob, classify(ob)) for ob in checker.obligations]
    accepted = all(verdict != FAILS for _, verdict in judged)
    return CheckResult(fundef.name, accepted, judged, warnings)


@dataclass
class ProgramCheckResult:
    results: list[CheckResult]

    @property
    def accepted(self) -> bool:
        return all(r.accepted for r in self.results)


def program_signature(program: syntax.Program) -> dict[str, FirstOrderType]:
    """Collect (and validate) all declared types; every function must carry one."""
    sigma: dict[str, FirstOrderType] = {}
    for name, ftype in program.externs:
        typesys.validate_first_order_type(name, ftype)
        sigma[name] = ftype
    missing = [f.name for f in program.functions if f.declared_type is None]
    if missing:
        raise CheckError(f"missing type annotations for: {', '.join(missing)}")
    for f in program.functions:
        sigma[f.name] = f.declared_type
    return sigma


def check_program(program: syntax.Program) -> ProgramCheckResult:
    """Check every annotated function of a core-form program."""
    sigma = program_signature(program)
    analysis = typesys.underlying_analysis(program, use_declared=True)
    results = [
        check_function(f, sigma, analysis.nil_types[f.name])
        for f in program.functions
    ]
    return ProgramCheckResult(results)


def with_candidate(program: syntax.Program, fname: str,
                   candidate: FirstOrderType) -> syntax.Program:
    """A copy of the program in which `fname` is annotated with `candidate`."""
    functions = tuple(
        replace(f, declared_type=candidate) if f.name == fname else f
        for f in program.functions
    )
    return syntax.Program(functions, program.externs, program.main)
