"""Big-step evaluation over a heap of cons cells and a frame store.

Program values are integers, ``NULL`` and heap locations.  The heap maps a
location to a (head, tail) pair; cons is the only allocator and nothing is
ever freed or mutated, so heaps grow monotonically and all list structure is
acyclic by construction.  The evaluator is an explicit-control machine, so
deeply recursive programs cannot overflow the Python stack, and every rule
application counts against an optional step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from . import syntax
from .poly import Polynomial
from .typesys import IntType, ListType, SizedType, TypeVar


class EvalError(Exception):
    pass


class StuckEvaluation(EvalError):
    """A rule failed to apply; indicates a checker or caller bug."""

    def __init__(self, message: str, pos: tuple[int, int] = (0, 0)):
        super().__init__(f"{pos[0]}:{pos[1]}: {message}" if pos != (0, 0) else message)
        self.pos = pos


class DivByZero(EvalError):
    def __init__(self, pos: tuple[int, int] = (0, 0)):
        super().__init__(f"{pos[0]}:{pos[1]}: division by zero")
        self.pos = pos


class BudgetExhausted(EvalError):
    def __init__(self, budget: int):
        super().__init__(f"evaluation exceeded the step budget of {budget}")
        self.budget = budget


class NonShapelyObservation(Exception):
    """Sibling lists at one nesting level have different lengths."""

    def __init__(self, level: int, lengths: Iterable[int]):
        self.level = level
        self.lengths = tuple(sorted(set(lengths)))
        super().__init__(f"lists at nesting level {level} have unequal lengths {self.lengths}")


# -- values, heap, store --------------------------------------------------------


@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class IntVal(Value):
    value: int


@dataclass(frozen=True)
class NullVal(Value):
    pass


@dataclass(frozen=True)
class Loc(Value):
    loc: int


NULL = NullVal()

Store = dict[str, Value]


class Heap:
    """Finite map location -> (head value, tail value) with a fresh-location counter."""

    __slots__ = ("cells", "_next")

    def __init__(self) -> None:
        self.cells: dict[int, tuple[Value, Value]] = {}
        self._next = 0

    def alloc(self, head: Value, tail: Value) -> Loc:
        self._next += 1
        self.cells[self._next] = (head, tail)
        return Loc(self._next)

    def __contains__(self, loc: int) -> bool:
        return loc in self.cells

    def __len__(self) -> int:
        return len(self.cells)

    def head(self, loc: int) -> Value:
        return self.cells[loc][0]

    def tail(self, loc: int) -> Value:
        return self.cells[loc][1]


@dataclass
class Closures:
    """Function bodies for calls, plus host callbacks for externs (tests only)."""

    funs: dict[str, tuple[tuple[str, ...], syntax.Expr]] = field(default_factory=dict)
    externs: dict[str, Callable[[list[Value], Heap], Value]] = field(default_factory=dict)

    def extended(self, name: str, params: tuple[str, ...], body: syntax.Expr) -> "Closures":
        funs = dict(self.funs)
        funs[name] = (params, body)
        return Closures(funs, self.externs)


def closures_from_program(program: syntax.Program) -> Closures:
    closures = Closures()
    for f in program.functions:
        closures.funs[f.name] = (f.params, f.body)
    return closures


# -- evaluation ------------------------------------------------------------------

def _binop(op: str, a: int, b: int, pos: tuple[int, int]) -> int:
    # div/mod truncate toward zero
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if b == 0:
        raise DivByZero(pos)
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    if op == "div":
        return q
    if op == "mod":
        return a - b * q
    raise StuckEvaluation(f"unknown operator {op!r}", pos)


def evaluate(expr: syntax.Expr, store: Store, heap: Heap, closures: Closures,
             budget: Optional[int] = None, debug: bool = False) -> tuple[Value, Heap]:
    """Evaluate an expression, returning its value and the (extended) heap.

    Compound arguments are evaluated left to right, so sugared and desugared
    programs produce identical results.  With ``debug=True`` the benign-sharing
    condition is asserted at every let: the binding may not disturb any cell
    reachable from the variables the body goes on to use.
    """
    steps = 0
    konts: list[tuple] = []
    control: tuple = ("ev", expr, store, closures)

    while True:
        if control[0] == "ev":
            _, e, s, cl = control
            steps += 1
            if budget is not None and steps > budget:
                raise BudgetExhausted(budget)
            if isinstance(e, syntax.IntConst):
                control = ("ret", IntVal(e.value))
            elif isinstance(e, syntax.Var):
                try:
                    control = ("ret", s[e.name])
                except KeyError:
                    raise StuckEvaluation(f"unbound variable {e.name!r}", e.pos) from None
            elif isinstance(e, syntax.Nil):
                control = ("ret", NULL)
            elif isinstance(e, syntax.BinOp):
                control = _combine_or_descend(e, (e.left, e.right), s, cl, konts)
            elif isinstance(e, syntax.Cons):
                control = _combine_or_descend(e, (e.head, e.tail), s, cl, konts)
            elif isinstance(e, syntax.ListLit):
                control = _combine_or_descend(e, e.items, s, cl, konts)
            elif isinstance(e, syntax.FunApp):
                control = _combine_or_descend(e, e.args, s, cl, konts)
            elif isinstance(e, syntax.If):
                control = _combine_or_descend(e, (e.cond,), s, cl, konts)
            elif isinstance(e, syntax.Match):
                if e.scrutinee not in s:
                    raise StuckEvaluation(f"unbound variable {e.scrutinee!r}", e.pos)
                v = s[e.scrutinee]
                if isinstance(v, NullVal):
                    control = ("ev", e.nil_branch, s, cl)
                elif isinstance(v, Loc):
                    s2 = dict(s)
                    s2[e.head_name] = heap.head(v.loc)
                    s2[e.tail_name] = heap.tail(v.loc)
                    control = ("ev", e.cons_branch, s2, cl)
                else:
                    raise StuckEvaluation(
                        f"match on a non-list value {v!r}", e.pos)
            elif isinstance(e, syntax.Let):
                snapshot = _sharing_snapshot(e, s, heap) if debug else None
                konts.append(("let", e, s, cl, snapshot))
                control = ("ev", e.bound, s, cl)
            elif isinstance(e, syntax.LetFun):
                inner = e.fundef
                control = ("ev", e.body, s, cl.extended(inner.name, inner.params, inner.body))
            elif isinstance(e, syntax.LetExtern):
                control = ("ev", e.body, s, cl)
            else:
                raise StuckEvaluation(f"cannot evaluate node {type(e).__name__}")
        else:
            _, value = control
            if not konts:
                return value, heap
            kont = konts.pop()
            if kont[0] == "let":
                _, e, s, cl, snapshot = kont
                if snapshot is not None:
                    _check_sharing(e, snapshot, heap)
                s2 = dict(s)
                s2[e.name] = value
                control = ("ev", e.body, s2, cl)
            else:
                _, e, s, cl, pending, values = kont
                values = values + [value]
                if pending:
                    konts.append(("args", e, s, cl, pending[1:], values))
                    control = ("ev", pending[0], s, cl)
                else:
                    control = _apply(e, values, s, cl, heap, konts)


def _combine_or_descend(e: syntax.Expr, subs: tuple[syntax.Expr, ...], s: Store,
                        cl: Closures, konts: list) -> tuple:
    if not subs:
        return _apply(e, [], s, cl, _NO_HEAP, konts)
    konts.append(("args", e, s, cl, list(subs[1:]), []))
    return ("ev", subs[0], s, cl)


class _NoHeap:
    pass


_NO_HEAP = _NoHeap()


def _apply(e: syntax.Expr, values: list[Value], s: Store, cl: Closures,
           heap, konts: list) -> tuple:
    if isinstance(e, syntax.BinOp):
        a, b = values
        if not (isinstance(a, IntVal) and isinstance(b, IntVal)):
            raise StuckEvaluation("arithmetic on a non-integer value", e.pos)
        return ("ret", IntVal(_binop(e.op, a.value, b.value, e.pos)))
    if isinstance(e, syntax.Cons):
        return ("ret", heap.alloc(values[0], values[1]))
    if isinstance(e, syntax.ListLit):
        acc: Value = NULL
        for v in reversed(values):
            acc = heap.alloc(v, acc)
        return ("ret", acc)
    if isinstance(e, syntax.If):
        (cond,) = values
        if not isinstance(cond, IntVal):
            raise StuckEvaluation("if-condition is not an integer", e.pos)
        return ("ev", e.then if cond.value != 0 else e.orelse, s, cl)
    if isinstance(e, syntax.FunApp):
        if e.fname in cl.funs:
            params, body = cl.funs[e.fname]
            if len(params) != len(values):
                raise StuckEvaluation(
                    f"{e.fname!r} expects {len(params)} argument(s), got {len(values)}", e.pos)
            return ("ev", body, dict(zip(params, values)), cl)
        if e.fname in cl.externs:
            return ("ret", cl.externs[e.fname](values, heap))
        raise StuckEvaluation(f"call to undefined function {e.fname!r}", e.pos)
    raise StuckEvaluation(f"cannot apply node {type(e).__name__}", e.pos)


def _sharing_snapshot(e: syntax.Let, s: Store, heap: Heap):
    fv = syntax.free_vars(e.body)
    locs: set[int] = set()
    for name in fv:
        if name in s:
            locs |= footprint(heap, s[name])
    return {loc: heap.cells[loc] for loc in locs}


def _check_sharing(e: syntax.Let, snapshot: dict[int, tuple[Value, Value]], heap: Heap) -> None:
    for loc, cell in snapshot.items():
        if heap.cells.get(loc) != cell:
            raise AssertionError(
                f"benign sharing violated at let {e.name!r} ({e.pos[0]}:{e.pos[1]}): "
                f"cell {loc} changed during the binding")


def run_function(program_closures: Closures, fname: str, args: list[Value], heap: Heap,
                 budget: Optional[int] = None, debug: bool = False) -> tuple[Value, Heap]:
    params, body = program_closures.funs[fname]
    if len(params) != len(args):
        raise StuckEvaluation(f"{fname!r} expects {len(params)} argument(s), got {len(args)}")
    return evaluate(body, dict(zip(params, args)), heap, program_closures,
                    budget=budget, debug=debug)


# -- footprints -------------------------------------------------------------------


def footprint(heap: Heap, value: Value) -> frozenset[int]:
    """Locations reachable from a value; integers and NULL reach nothing."""
    if not isinstance(value, Loc):
        return frozenset()
    seen: set[int] = set()
    todo = [value.loc]
    while todo:
        loc = todo.pop()
        if loc in seen or loc not in heap.cells:
            continue
        seen.add(loc)
        for v in heap.cells[loc]:
            if isinstance(v, Loc):
                todo.append(v.loc)
    return frozenset(seen)


def store_footprint(heap: Heap, store: Mapping[str, Value]) -> frozenset[int]:
    out: frozenset[int] = frozenset()
    for v in store.values():
        out |= footprint(heap, v)
    return out


# -- the set-theoretic reading ------------------------------------------------------

Reading = object  # int | list[Reading]


def models(value: Value, heap: Heap, ground_type: SizedType,
           _excluded: frozenset[int] = frozenset()) -> Optional[Reading]:
    """The unique nested-sequence reading of a value at a ground type, or None.

    Ground types carry constant natural sizes and no type variables.  The
    reading demands exact lengths at every level and walks the heap with the
    current location removed, so cyclic structures can never satisfy it.
    """
    if isinstance(ground_type, IntType):
        return value.value if isinstance(value, IntVal) else None
    if isinstance(ground_type, TypeVar):
        raise ValueError("the reading is only defined for ground types")
    assert isinstance(ground_type, ListType)
    size = ground_type.size
    if not size.is_constant:
        raise ValueError(f"size {size} is not a natural constant")
    n = size.constant_value()
    if n.denominator != 1 or n < 0:
        raise ValueError(f"size {size} is not a natural constant")
    n = int(n)
    if n == 0:
        return [] if isinstance(value, NullVal) else None
    if not isinstance(value, Loc) or value.loc in _excluded or value.loc not in heap.cells:
        return None
    head, tail = heap.cells[value.loc]
    excluded = _excluded | {value.loc}
    w_head = models(head, heap, ground_type.elem, excluded)
    if w_head is None:
        return None
    w_tail = models(tail, heap, ListType(ground_type.elem, Polynomial.constant(n - 1)),
                    excluded)
    if w_tail is None:
        return None
    return [w_head] + w_tail


# -- size measurement ----------------------------------------------------------------


def list_length(heap: Heap, value: Value, pos: tuple[int, int] = (0, 0)) -> tuple[int, list[Value]]:
    """Length of a list value and its elements, following tail pointers."""
    elems: list[Value] = []
    seen: set[int] = set()
    v = value
    while True:
        if isinstance(v, NullVal):
            return len(elems), elems
        if not isinstance(v, Loc) or v.loc not in heap.cells or v.loc in seen:
            raise StuckEvaluation("value is not a well-formed list", pos)
        seen.add(v.loc)
        head, tail = heap.cells[v.loc]
        elems.append(head)
        v = tail


def measure_sizes(value: Value, heap: Heap, depth: int) -> tuple[Optional[int], ...]:
    """Observed list length per nesting level, outermost first.

    A level reports a length only when at least one list exists there and all
    of them agree; with no lists at a level (every enclosing list was empty)
    the entry is None.  Disagreeing sibling lengths raise
    NonShapelyObservation.
    """
    report: list[Optional[int]] = []
    current = [value]
    for level in range(1, depth + 1):
        lengths: set[int] = set()
        next_level: list[Value] = []
        for v in current:
            n, elems = list_length(heap, v)
            lengths.add(n)
            next_level.extend(elems)
        if not current:
            report.append(None)
        elif len(lengths) > 1:
            raise NonShapelyObservation(level, lengths)
        else:
            report.append(lengths.pop())
        current = next_level
    return tuple(report)


# -- value literals -------------------------------------------------------------------


class ValueSyntaxError(ValueError):
    pass


def parse_value_literal(text: str, heap: Heap) -> Value:
    """Parse "17", "[1,2,3]", "[[0,1],[]]" ... into a heap value."""
    import json

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueSyntaxError(f"bad value literal {text!r}: {exc}") from None
    return _build_value(data, heap, text)


def _build_value(data, heap: Heap, original: str) -> Value:
    if isinstance(data, bool) or not isinstance(data, (int, list)):
        raise ValueSyntaxError(f"bad value literal {original!r}: only integers and lists")
    if isinstance(data, int):
        return IntVal(data)
    acc: Value = NULL
    for item in reversed(data):
        acc = heap.alloc(_build_value(item, heap, original), acc)
    return acc


def value_to_literal(value: Value, heap: Heap) -> str:
    if isinstance(value, IntVal):
        return str(value.value)
    if isinstance(value, NullVal):
        return "[]"
    _, elems = list_length(heap, value)
    return "[" + ",".join(value_to_literal(v, heap) for v in elems) + "]"


def value_to_python(value: Value, heap: Heap):
    """Structural reader: the untyped nested-list view of a value."""
    if isinstance(value, IntVal):
        return value.value
    if isinstance(value, NullVal):
        return []
    _, elems = list_length(heap, value)
    return [value_to_python(v, heap) for v in elems]
