import pytest

import sizetypes as st
from sizetypes.poly import Polynomial
from sizetypes.semantics import (
    NULL, BudgetExhausted, DivByZero, Heap, IntVal, Loc, NonShapelyObservation,
    StuckEvaluation, footprint, list_length, measure_sizes, models,
    parse_value_literal, value_to_literal, value_to_python,
)
from sizetypes.typesys import INT, ListType

from conftest import eval_function


def ground_list(elem, size):
    return ListType(elem, Polynomial.constant(size))


def test_cprod_evaluates_like_the_worked_example(basics):
    assert eval_function(basics, "cprod", "[1,2,3]", "[4,5]") == \
        [[1, 4], [1, 5], [2, 4], [2, 5], [3, 4], [3, 5]]


def test_progression_example(progression_program):
    assert eval_function(progression_program, "progression", "[1,2,3]") == \
        [3, 2, 3, 1, 2, 3]


def test_nil_evaluates_to_null_without_allocation():
    heap = st.Heap()
    before = dict(heap.cells)
    value, heap = st.evaluate(st.parse_expr("nil"), {}, heap, st.Closures())
    assert value == NULL
    assert heap.cells == before


def test_if_branches_on_nonzero():
    program = st.desugar(st.parse_program(
        "letfun pick(x) = if x then 1 else 2 in"))
    assert eval_function(program, "pick", "7") == 1
    assert eval_function(program, "pick", "-1") == 1
    assert eval_function(program, "pick", "0") == 2


def test_div_mod_truncate_and_raise_on_zero():
    program = st.desugar(st.parse_program(
        "letfun q(x, y) = x div y in letfun r(x, y) = x mod y in"))
    assert eval_function(program, "q", "7", "2") == 3
    assert eval_function(program, "q", "-7", "2") == -3
    assert eval_function(program, "r", "-7", "2") == -1
    assert eval_function(program, "r", "7", "-2") == 1
    with pytest.raises(DivByZero):
        eval_function(program, "q", "1", "0")


def test_match_on_integer_is_stuck():
    program = st.desugar(st.parse_program(
        "letfun f(l) = match l with | nil -> 0 | cons(h, t) -> 1 in"))
    with pytest.raises(StuckEvaluation):
        eval_function(program, "f", "5")


def test_budget_exhaustion():
    program = st.desugar(st.parse_program("letfun spin(x) = spin(x) in"))
    heap = st.Heap()
    with pytest.raises(BudgetExhausted):
        st.run_function(st.closures_from_program(program), "spin",
                        [IntVal(1)], heap, budget=1000)


def test_deep_recursion_does_not_overflow_the_python_stack(progression_program):
    result = eval_function(progression_program, "append",
                           "[" + ",".join("0" for _ in range(30000)) + "]", "[]")
    assert len(result) == 30000


def test_letfun_and_letextern_expressions():
    expr = st.parse_expr("letfun twice(x) = x + x in twice(21)")
    value, _ = st.evaluate(st.desugar(
        st.Program((st.syntax.FunDef("f", ("z",), expr),))).functions[0].body,
        {"z": IntVal(0)}, st.Heap(), st.Closures())
    assert value == IntVal(42)

    heap = st.Heap()
    called = []

    def host(args, h):
        called.append(args)
        return h.alloc(args[0], NULL)

    cl = st.Closures(externs={"mk": host})
    expr2 = st.parse_expr("letextern mk(x) in mk(9)")
    value, heap = st.evaluate(st.desugar(
        st.Program((st.syntax.FunDef("f", ("z",), expr2),))).functions[0].body,
        {"z": IntVal(0)}, heap, cl)
    assert called == [[IntVal(9)]]
    assert value_to_python(value, heap) == [9]


def test_footprint_of_scalars_and_lists():
    heap = Heap()
    assert footprint(heap, IntVal(7)) == frozenset()
    assert footprint(heap, NULL) == frozenset()
    inner = heap.alloc(IntVal(2), NULL)
    outer = heap.alloc(IntVal(1), inner)
    assert footprint(heap, outer) == {outer.loc, inner.loc}
    assert footprint(heap, Loc(999)) == frozenset()  # dangling
    assert footprint(heap, outer) <= frozenset(heap.cells)


def test_footprint_with_sharing():
    heap = Heap()
    shared = heap.alloc(IntVal(5), NULL)
    a = heap.alloc(shared, NULL)
    b = heap.alloc(shared, a)
    assert footprint(heap, b) == {shared.loc, a.loc, b.loc}


def test_heap_monotonicity_during_evaluation(basics):
    heap = st.Heap()
    arg1 = parse_value_literal("[1,2]", heap)
    arg2 = parse_value_literal("[3]", heap)
    before = dict(heap.cells)
    _, after = st.run_function(st.closures_from_program(basics), "cprod",
                               [arg1, arg2], heap)
    assert set(before) <= set(after.cells)
    assert all(after.cells[loc] == cell for loc, cell in before.items())


def test_benign_sharing_assertion_runs(basics):
    heap = st.Heap()
    args = [parse_value_literal("[1,2]", heap), parse_value_literal("[3,4]", heap)]
    value, heap = st.run_function(st.closures_from_program(basics), "cprod",
                                  args, heap, debug=True)
    assert len(value_to_python(value, heap)) == 4


def test_models_examples():
    heap = Heap()
    assert models(NULL, heap, ground_list(INT, 0)) == []
    assert models(NULL, heap, ground_list(INT, 2)) is None
    one = parse_value_literal("[1]", heap)
    assert models(one, heap, ground_list(INT, 2)) is None  # length mismatch
    assert models(one, heap, ground_list(INT, 1)) == [1]
    nested = parse_value_literal("[[1,4],[1,5],[2,4],[2,5],[3,4],[3,5]]", heap)
    reading = models(nested, heap, ground_list(ground_list(INT, 2), 6))
    assert reading == [[1, 4], [1, 5], [2, 4], [2, 5], [3, 4], [3, 5]]
    assert models(IntVal(3), heap, INT) == 3
    assert models(NULL, heap, INT) is None


def test_models_depends_only_on_the_footprint():
    heap = Heap()
    value = parse_value_literal("[1,2]", heap)
    unrelated = heap.alloc(IntVal(9), NULL)
    gt = ground_list(INT, 2)
    before = models(value, heap, gt)
    heap.cells[unrelated.loc] = (IntVal(-1), NULL)  # mutate outside the footprint
    assert unrelated.loc not in footprint(heap, value)
    assert models(value, heap, gt) == before


def test_measure_sizes_levels():
    heap = Heap()
    v = parse_value_literal("[[0,1]]", heap)
    assert measure_sizes(v, heap, 2) == (1, 2)
    empty = parse_value_literal("[]", heap)
    assert measure_sizes(empty, heap, 2) == (0, None)
    flat = parse_value_literal("[7,8,9]", heap)
    assert measure_sizes(flat, heap, 1) == (3,)


def test_measure_sizes_detects_ragged_lists():
    heap = Heap()
    ragged = parse_value_literal("[[1],[2,3]]", heap)
    with pytest.raises(NonShapelyObservation) as info:
        measure_sizes(ragged, heap, 2)
    assert info.value.level == 2
    assert info.value.lengths == (1, 2)


def test_value_literals_round_trip():
    heap = Heap()
    for text in ("17", "-4", "[]", "[1,2,3]", "[[0,1]]", "[[1],[2,3],[]]"):
        value = parse_value_literal(text, heap)
        assert value_to_literal(value, heap) == text.replace(" ", "")
    with pytest.raises(st.semantics.ValueSyntaxError):
        parse_value_literal("[1,", heap)
    with pytest.raises(st.semantics.ValueSyntaxError):
        parse_value_literal("true", heap)


def test_list_length_walks_tails():
    heap = Heap()
    v = parse_value_literal("[5,6,7]", heap)
    length, elems = list_length(heap, v)
    assert length == 3
    assert [value_to_python(e, heap) for e in elems] == [5, 6, 7]
