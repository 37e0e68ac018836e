import pytest

import sizetypes as st
from sizetypes import syntax
from sizetypes.syntax import (
    Cons, FunApp, If, IntConst, Let, ListLit, Match, Nil, ParseError, ScopeError, Var,
)

from conftest import CHECKED_FILES, INFERENCE_FILES, PROGRAMS, eval_function, load_core

SUGARED_CPROD = """
letfun cprod(l1, l2) =
  match l1 with
  | nil -> nil
  | cons(hd, tl) -> append(pairs(hd, l2), cprod(tl, l2))
in
"""


def test_parse_identity_function():
    program = st.parse_program("letfun id(l) = l in id")
    assert len(program.functions) == 1
    f = program.functions[0]
    assert f.name == "id"
    assert f.params == ("l",)
    assert f.body == Var("l")
    assert program.main == Var("id")


def test_parse_sugared_cprod_keeps_nested_calls():
    program = st.parse_program(SUGARED_CPROD)
    body = program.functions[0].body
    assert isinstance(body, Match)
    call = body.cons_branch
    assert isinstance(call, FunApp) and call.fname == "append"
    inner1, inner2 = call.args
    assert isinstance(inner1, FunApp) and inner1.fname == "pairs"
    assert isinstance(inner2, FunApp) and inner2.fname == "cprod"


def test_parse_errors():
    with pytest.raises(ParseError):
        st.parse_program("letfun f(l) = match l with in")
    with pytest.raises(ParseError):
        st.parse_program("letfun f(l) = match l with | nil -> nil in")  # missing cons arm
    with pytest.raises(ParseError):
        st.parse_program("letfun f(x, x) = x in")
    with pytest.raises(ParseError):
        st.parse_program("letfun f(x) = $1 in")
    with pytest.raises(ParseError):
        st.parse_program("letfun f(x) = x in letfun f(y) = y in")


def test_annotations_attach_and_validate_arity():
    program = st.parse_program("f : L(a,n) -> L(a,n)\nletfun f(l) = l in")
    assert str(program.functions[0].declared_type) == "L(a,n) -> L(a,n)"
    with pytest.raises(ParseError):
        st.parse_program("f : L(a,n) * L(a,m) -> L(a,n)\nletfun f(l) = l in")
    with pytest.raises(ParseError):
        st.parse_program("g : L(a,n) -> L(a,n)\nletfun f(l) = l in")


def test_letextern_requires_annotation():
    program = st.parse_program("g : L(a,n) -> L(a,n)\nletextern g(l) in")
    assert program.externs[0][0] == "g"
    with pytest.raises(ParseError):
        st.parse_program("letextern g(l) in")


def test_comments_and_primes():
    program = st.parse_program(
        "-- a comment\nletfun f(l') = l' in -- trailing\n")
    assert program.functions[0].params == ("l'",)


def test_desugar_hoists_nested_calls_left_to_right():
    program = st.desugar(st.parse_program(SUGARED_CPROD))
    branch = program.functions[0].body.cons_branch
    assert isinstance(branch, Let)
    first = branch.bound
    assert isinstance(first, FunApp) and first.fname == "pairs"
    assert isinstance(branch.body, Let)
    second = branch.body.bound
    assert isinstance(second, FunApp) and second.fname == "cprod"
    tail_call = branch.body.body
    assert isinstance(tail_call, FunApp) and tail_call.fname == "append"
    assert tail_call.args == (Var(branch.name), Var(branch.body.name))


def test_desugar_hoists_literals_in_cons():
    program = st.desugar(st.parse_program("letfun f(l) = cons(1, nil) in"))
    body = program.functions[0].body
    assert isinstance(body, Let) and body.bound == IntConst(1)
    assert isinstance(body.body, Let) and body.body.bound == Nil()
    assert body.body.body == Cons(Var(body.name), Var(body.body.name))


def test_desugar_is_idempotent_on_corpus():
    for name in set(CHECKED_FILES + INFERENCE_FILES):
        core = load_core(name)
        assert st.desugar(core) == core


def test_desugar_produces_core_form():
    for name in set(CHECKED_FILES + INFERENCE_FILES):
        core = load_core(name)
        for f in core.functions:
            assert syntax.is_core_form(f.body)


def test_desugar_preserves_evaluation():
    # The evaluator runs sugared argument positions directly, so the sugared
    # and desugared programs can be compared end to end.
    text = (PROGRAMS / "examples.shp").read_text()
    sugared = st.parse_program(text)
    st.scope_check(sugared)
    desugared = st.desugar(sugared)
    for args in (("[1,2,3]", "[4,5]"), ("[]", "[0]"), ("[2]", "[]")):
        assert eval_function(sugared, "cprod", *args) == \
            eval_function(desugared, "cprod", *args)
    heap_a, heap_b = st.Heap(), st.Heap()
    va, _ = st.evaluate(sugared.main, {}, heap_a, st.closures_from_program(sugared))
    vb, _ = st.evaluate(desugared.main, {}, heap_b, st.closures_from_program(desugared))
    assert st.value_to_python(va, heap_a) == st.value_to_python(vb, heap_b)


def test_print_parse_round_trip_is_stable():
    for name in set(CHECKED_FILES + INFERENCE_FILES) | {"examples.shp"}:
        text = (PROGRAMS / name).read_text()
        once = st.parse_program(text)
        again = st.parse_program(st.to_source(once))
        assert once == again
        assert st.to_source(once) == st.to_source(again)


def test_extern_programs_round_trip():
    text = """g : L(a,n) -> L(a,n^2)
letextern g(l) in

wrap : L(a,n) -> L(a,n^2)
letfun wrap(l) = g(l) in

main = wrap([1,2])
"""
    program = st.parse_program(text)
    assert st.parse_program(st.to_source(program)) == program


def test_scope_check_rejects():
    with pytest.raises(ScopeError):
        st.scope_check(st.parse_program("letfun f(l) = g(l) in"))  # unknown callee
    with pytest.raises(ScopeError):
        st.scope_check(st.parse_program("letfun f(l) = x in"))  # unbound var
    with pytest.raises(ScopeError):
        st.scope_check(st.parse_program(
            "letfun f(l) = g(l) in letfun g(l) = l in"))  # forward reference
    with pytest.raises(ScopeError):
        st.scope_check(st.parse_program(
            "letfun f(l) = let l = nil in l in"))  # shadowing
    with pytest.raises(ScopeError):
        st.scope_check(st.parse_program(
            "letfun f(l, x) = f(l) in"))  # arity
    st.scope_check(st.parse_program("letfun f(l) = f(l) in"))  # recursion is fine


def test_restriction_rejects_match_on_let_bound():
    program = st.parse_program((PROGRAMS / "banned.shp").read_text())
    st.scope_check(program)
    violations = st.validate_restriction(st.desugar(program))
    assert [v.function for v in violations] == ["hidden"]
    assert violations[0].scrutinee == "l"


def test_restriction_accepts_match_chains():
    core = st.desugar(st.parse_program("""
letfun f(l) =
  match l with
  | nil -> nil
  | cons(hd, tl) ->
      match tl with
      | nil -> nil
      | cons(hd', tl') -> f(tl')
in
"""))
    assert st.validate_restriction(core) == []


def test_restriction_accepts_no_match():
    core = st.desugar(st.parse_program("letfun f(x) = x + 1 in"))
    assert st.validate_restriction(core) == []


def test_restriction_exhaustive_on_small_asts():
    # Sweep all two-deep match/let skeletons over one parameter: a body is
    # accepted exactly when no match scrutinee is the let-bound name.
    nil = Nil()

    def program_with(body):
        return st.Program((syntax.FunDef("f", ("p",), body),))

    def inner_bodies(scope):
        yield nil, None
        for name in scope:
            yield Match(name, "h2", "t2", nil, nil), name

    outer_scrutinees = ["p", "z"]
    for outer in outer_scrutinees:
        for wrap_in_let in (False, True):
            base_scope = ["p", "z"] if wrap_in_let else ["p"]
            if outer not in base_scope:
                continue
            for cons_branch, inner in inner_bodies(base_scope + ["h", "t"]):
                body = Match(outer, "h", "t", nil, cons_branch)
                if wrap_in_let:
                    body = Let("z", FunApp("f", (Var("p"),)), body)
                scrutinized = [outer] + ([inner] if inner else [])
                expected_bad = sorted(name for name in scrutinized if name == "z")
                violations = st.validate_restriction(program_with(body))
                assert sorted(v.scrutinee for v in violations) == expected_bad, body
