import random

import pytest

import sizetypes as st
from sizetypes.poly import Polynomial
from sizetypes.typesys import (
    INT, AnnotationError, FirstOrderType, ListType, OccursCheck, TypeVar,
    UnderlyingFun, UnderlyingList, UnificationFailure, annotate_with_variables,
    free_size_vars, infer_underlying, parse_ftype, parse_sized_type, type_equiv,
    validate_first_order_type,
)

n = Polynomial.variable("n")
m = Polynomial.variable("m")
A = TypeVar("a")


def L(elem, size):
    return ListType(elem, size if isinstance(size, Polynomial) else Polynomial.constant(size))


def test_type_equiv_under_constraints():
    # m = 0 makes the sizes n+m and n coincide.
    assert type_equiv([m], L(A, n + m), L(A, n))
    # m-1 = 0 and n = 0: the outer size is zero, inner sizes are irrelevant.
    assert type_equiv([m - 1, n], L(L(A, 2), n + m - 1), L(L(A, 3), n))
    # n = 0 alone does not force m-1 to equal n+m-1 everywhere.
    assert not type_equiv([n], L(L(A, 2), n + m - 1), L(L(A, 3), m - 1))


def test_type_equiv_zero_collapse_and_underlying():
    assert type_equiv([], L(L(A, n), 0), L(L(A, m * m + 7), 0))
    assert not type_equiv([], L(A, 0), L(INT, 0))  # different underlying types
    assert not type_equiv([], L(A, n), L(A, m))
    assert type_equiv([], INT, INT)


def test_type_equiv_is_an_equivalence_relation():
    rng = random.Random(11)
    elems = [INT, A, TypeVar("b"), L(A, 2), L(INT, n)]

    def random_type(depth=2):
        if depth == 0 or rng.random() < 0.4:
            return rng.choice(elems)
        size = Polynomial.constant(rng.randint(0, 3)) if rng.random() < 0.5 else n
        return L(random_type(depth - 1), size)

    constraints = [n - 1]
    types = [random_type() for _ in range(60)]
    for t in types:
        assert type_equiv(constraints, t, t)
    for x in types:
        for y in types:
            assert type_equiv(constraints, x, y) == type_equiv(constraints, y, x)
    for x in types:
        for y in types:
            if not type_equiv(constraints, x, y):
                continue
            for z in types:
                if type_equiv(constraints, y, z):
                    assert type_equiv(constraints, x, z)


def test_free_size_vars_erased_under_zero():
    assert free_size_vars(L(L(A, m), 0)) == frozenset()
    assert free_size_vars(L(L(A, m), n)) == {"n", "m"}
    assert free_size_vars(L(A, n * m)) == {"n", "m"}
    assert free_size_vars(INT) == frozenset()


def test_infer_underlying_cprod(basics):
    types = infer_underlying(basics)
    cprod = types["cprod"]
    assert str(cprod) == "L(a) * L(a) -> L(L(a))"
    assert str(types["append"]) == "L(a) * L(a) -> L(a)"


def test_infer_underlying_int_function():
    program = st.desugar(st.parse_program("letfun f(x) = x + 1 in"))
    types = infer_underlying(program)
    assert str(types["f"]) == "Int -> Int"


def test_infer_underlying_occurs_check():
    program = st.desugar(st.parse_program("letfun f(x) = cons(x, x) in"))
    with pytest.raises(OccursCheck):
        infer_underlying(program)


def test_infer_underlying_mismatch():
    program = st.desugar(st.parse_program(
        "letfun f(x) = let y = x + 1 in cons(y, x) in"))
    with pytest.raises(UnificationFailure):
        infer_underlying(program)


def test_annotate_with_variables_numbers_positions():
    cprod = UnderlyingFun((UnderlyingList(A), UnderlyingList(A)),
                          UnderlyingList(UnderlyingList(A)))
    template = annotate_with_variables(cprod)
    assert template.input_vars == ("n1", "n2")
    assert template.output_depth == 2
    assert str(template.params[0]) == "L(a,n1)"
    assert str(template.first_order([n * m, Polynomial.constant(2)]).result) \
        == "L(L(a,2),m*n)"

    nested = UnderlyingFun((UnderlyingList(UnderlyingList(A)),), UnderlyingList(A))
    t2 = annotate_with_variables(nested)
    assert t2.input_vars == ("n1", "n2")
    assert str(t2.params[0]) == "L(L(a,n2),n1)"
    assert t2.output_depth == 1

    int_fun = annotate_with_variables(UnderlyingFun((INT,), INT))
    assert int_fun.input_vars == ()
    assert int_fun.output_depth == 0


def test_validate_first_order_type():
    ok = parse_ftype("L(a,n) * L(a,m) -> L(a,n+m)")
    assert validate_first_order_type("append", ok) == []
    with pytest.raises(AnnotationError):
        validate_first_order_type("bad", parse_ftype("L(a,n+1) -> L(a,n)"))
    with pytest.raises(AnnotationError):
        validate_first_order_type("bad", parse_ftype("L(a,n) -> L(a,m)"))


def test_totality_warning_for_transpose_style_types():
    transpose = parse_ftype("L(L(a,m),n) -> L(L(a,n),m)")
    warnings = validate_first_order_type("transpose", transpose)
    assert warnings and "partial" in warnings[0]
    # Repeated parameter variables (an equality constraint) are allowed.
    dotprod = parse_ftype("L(Int,m) * L(Int,m) -> Int")
    assert validate_first_order_type("dotprod", dotprod) == []


def test_type_syntax_round_trip():
    # Printed polynomials are canonical (graded lexicographic), so n+m
    # renders as "m + n"; parsing the printed form is the identity.
    for text in ("L(a,m + n) * L(a,m) -> L(a,m + n)",
                 "a * L(a,m) -> L(L(a,2),m)",
                 "Int -> Int",
                 "L(a,n) -> L(a,1/2*n^2 + 1/2*n)"):
        ftype = parse_ftype(text)
        assert str(ftype) == text
        assert parse_ftype(str(ftype)) == ftype
    assert str(parse_ftype("L(a,n) * L(a,m) -> L(a,n+m)")) \
        == "L(a,n) * L(a,m) -> L(a,m + n)"


def test_parse_sized_type():
    t = parse_sized_type("L(L(Int,2), n*m)")
    assert isinstance(t, ListType)
    assert t.size == n * m
    assert t.elem == L(INT, 2)


def test_declared_types_drive_the_underlying_pass(basics):
    # Re-running inference with annotations in place agrees with the bodies.
    types = st.typesys.underlying_analysis(basics, use_declared=True).types
    assert str(types["cprod"].result) == "L(L(a))"


def test_inferred_underlying_types_recheck(nonlinear_program):
    # Declaring the inferred shapes (sizes irrelevant here) and re-running the
    # pass against the bodies never fails.
    from sizetypes.typesys import UnderlyingList as UL

    def sized_with_zero(u):
        if isinstance(u, UL):
            return ListType(sized_with_zero(u.elem), Polynomial())
        return u

    inferred = infer_underlying(nonlinear_program)
    annotated = nonlinear_program
    for fname, ufun in inferred.items():
        ftype = FirstOrderType(tuple(sized_with_zero(p) for p in ufun.params),
                               sized_with_zero(ufun.result))
        annotated = st.checker.with_candidate(annotated, fname, ftype)
    redone = st.typesys.underlying_analysis(annotated, use_declared=True).types
    assert {f: str(t) for f, t in redone.items()} == \
        {f: str(t) for f, t in inferred.items()}
