"""Sized zero-order and first-order types.

A zero-order type is ``Int``, a type variable, or a list type carrying a
polynomial length.  First-order types describe functions whose parameter
annotations are bare size variables; the result may carry arbitrary
polynomials over those variables.  This module also provides type
equivalence under a constraint set, underlying (size-erased) type inference
by unification, and the size-variable annotation step used by inference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .poly import Polynomial, ZERO, parse_poly_tokens


class AnnotationError(Exception):
    pass


class UnificationFailure(Exception):
    def __init__(self, message: str, pos: tuple[int, int] = (0, 0)):
        super().__init__(f"{pos[0]}:{pos[1]}: {message}" if pos != (0, 0) else message)
        self.message = message
        self.pos = pos


class OccursCheck(UnificationFailure):
    pass


# -- zero-order types -----------------------------------------------------------


@dataclass(frozen=True)
class SizedType:
    pass


@dataclass(frozen=True)
class IntType(SizedType):
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class TypeVar(SizedType):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ListType(SizedType):
    elem: SizedType
    size: Polynomial

    def __str__(self) -> str:
        return f"L({self.elem},{self.size})"


INT = IntType()


def same_underlying(a: SizedType, b: SizedType) -> bool:
    if isinstance(a, ListType) and isinstance(b, ListType):
        return same_underlying(a.elem, b.elem)
    return a == b if not isinstance(a, ListType) else False


def free_size_vars(t: SizedType) -> frozenset[str]:
    """Size variables of a type, on the equivalence-class normal form.

    Annotations below a syntactically zero outer size are erased, so e.g. a
    list of m-sized lists with outer size 0 has no free size variables.
    """
    if isinstance(t, ListType):
        inner = frozenset() if t.size.is_zero else free_size_vars(t.elem)
        return t.size.variables() | inner
    return frozenset()


def free_type_vars(t: SizedType) -> frozenset[str]:
    if isinstance(t, TypeVar):
        return frozenset({t.name})
    if isinstance(t, ListType):
        return free_type_vars(t.elem)
    return frozenset()


def substitute_sizes(t: SizedType, mapping: Mapping[str, Polynomial]) -> SizedType:
    if isinstance(t, ListType):
        return ListType(substitute_sizes(t.elem, mapping), t.size.substitute(mapping))
    return t


def substitute_type_vars(t: SizedType, mapping: Mapping[str, SizedType]) -> SizedType:
    if isinstance(t, TypeVar):
        return mapping.get(t.name, t)
    if isinstance(t, ListType):
        return ListType(substitute_type_vars(t.elem, mapping), t.size)
    return t


def list_depth(t: SizedType) -> int:
    depth = 0
    while isinstance(t, ListType):
        depth += 1
        t = t.elem
    return depth


def type_equiv(constraints: Sequence[Polynomial], a: SizedType, b: SizedType) -> bool:
    """Equivalence of sized types under a constraint set (each entry means p = 0).

    Types are equivalent when their underlying shapes coincide and, level by
    level, the sizes are provably equal; once a level's size is provably zero
    the element types below it are irrelevant.
    """
    from .checker import entails_poly_eq, entails_poly_zero

    if not same_underlying(a, b):
        return False

    def go(x: SizedType, y: SizedType) -> bool:
        if isinstance(x, ListType):
            assert isinstance(y, ListType)
            if not entails_poly_eq(constraints, x.size, y.size):
                return False
            if entails_poly_zero(constraints, x.size):
                return True
            return go(x.elem, y.elem)
        return True

    return go(a, b)


# -- first-order types ------------------------------------------------------------


@dataclass(frozen=True)
class FirstOrderType:
    params: tuple[SizedType, ...]
    result: SizedType

    def __str__(self) -> str:
        left = " * ".join(str(p) for p in self.params)
        return f"{left} -> {self.result}"

    def param_size_vars(self) -> tuple[str, ...]:
        """Size variables of the parameters, outermost-in, left to right."""
        out: list[str] = []
        for p in self.params:
            _collect_bare_vars(p, out)
        return tuple(out)


def _collect_bare_vars(t: SizedType, out: list[str]) -> None:
    if isinstance(t, ListType):
        v = t.size.single_variable()
        if v is not None and v not in out:
            out.append(v)
        _collect_bare_vars(t.elem, out)


def validate_first_order_type(name: str, ftype: FirstOrderType) -> list[str]:
    """Enforce the first-order shape and return (non-fatal) warnings.

    Every parameter list annotation must be a bare size variable, and the
    result's size variables must all come from the parameters.  The stronger
    condition needed for totality (the inclusion must survive zeroing any
    subset of size variables) is reported as a warning only, since partial
    functions may legitimately escape it.
    """
    param_vars: set[str] = set()
    for i, p in enumerate(ftype.params):
        t = p
        while isinstance(t, ListType):
            v = t.size.single_variable()
            if v is None:
                raise AnnotationError(
                    f"{name}: parameter {i + 1} annotation {t.size} is not a bare size variable")
            param_vars.add(v)
            t = t.elem
    extra = free_size_vars(ftype.result) - param_vars
    if extra:
        raise AnnotationError(
            f"{name}: result mentions size variables not bound by parameters: {sorted(extra)}")

    warnings: list[str] = []
    all_vars = sorted(param_vars)
    if len(all_vars) <= 10:
        for zeroed in _nonempty_subsets(all_vars):
            mapping = {v: ZERO for v in zeroed}
            params0 = [substitute_sizes(p, mapping) for p in ftype.params]
            result0 = substitute_sizes(ftype.result, mapping)
            available = frozenset().union(*(free_size_vars(p) for p in params0)) if params0 else frozenset()
            hidden = free_size_vars(result0) - available
            if hidden:
                warnings.append(
                    f"{name}: with {', '.join(zeroed)} = 0 the result still depends on "
                    f"{sorted(hidden)}; the type is only valid for a partial function")
                break
    return warnings


def _nonempty_subsets(items: Sequence[str]) -> Iterable[tuple[str, ...]]:
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


# -- ground instantiation -----------------------------------------------------------


def instantiate_ground(t: SizedType, sizes: Mapping[str, int],
                       elem: SizedType = INT) -> SizedType:
    """Close a type: evaluate sizes at a valuation, map type variables to `elem`."""
    if isinstance(t, TypeVar):
        return elem
    if isinstance(t, ListType):
        n = t.size.evaluate(sizes)
        if n.denominator != 1 or n < 0:
            raise ValueError(f"size {t.size} evaluates to non-natural {n}")
        return ListType(instantiate_ground(t.elem, sizes, elem), Polynomial.constant(n))
    return t


# -- underlying types and unification ------------------------------------------------

# Underlying (size-erased) types reuse IntType/TypeVar for leaves:


@dataclass(frozen=True)
class UnderlyingList:
    elem: "Underlying"

    def __str__(self) -> str:
        return f"L({self.elem})"


Underlying = object  # IntType | TypeVar | UnderlyingList


@dataclass(frozen=True)
class UnderlyingFun:
    params: tuple[Underlying, ...]
    result: Underlying

    def __str__(self) -> str:
        return " * ".join(str(p) for p in self.params) + f" -> {self.result}"


def strip_sizes(t: SizedType) -> Underlying:
    if isinstance(t, ListType):
        return UnderlyingList(strip_sizes(t.elem))
    return t


class _UVar:
    __slots__ = ("id", "ref")
    _counter = itertools.count()

    def __init__(self) -> None:
        self.id = next(self._counter)
        self.ref: object | None = None


class _UList:
    __slots__ = ("elem",)

    def __init__(self, elem: object):
        self.elem = elem


_UINT = object()


def _find(t: object) -> object:
    while isinstance(t, _UVar) and t.ref is not None:
        t = t.ref
    return t


def _occurs(v: _UVar, t: object) -> bool:
    t = _find(t)
    if t is v:
        return True
    if isinstance(t, _UList):
        return _occurs(v, t.elem)
    return False


def _unify(a: object, b: object, pos: tuple[int, int]) -> None:
    a, b = _find(a), _find(b)
    if a is b:
        return
    if isinstance(a, _UVar):
        if _occurs(a, b):
            raise OccursCheck("cannot construct an infinite (self-containing) type", pos)
        a.ref = b
        return
    if isinstance(b, _UVar):
        _unify(b, a, pos)
        return
    if a is _UINT and b is _UINT:
        return
    if isinstance(a, _UList) and isinstance(b, _UList):
        _unify(a.elem, b.elem, pos)
        return
    raise UnificationFailure(
        f"cannot unify {_u_describe(a)} with {_u_describe(b)}", pos)


def _u_describe(t: object) -> str:
    t = _find(t)
    if t is _UINT:
        return "Int"
    if isinstance(t, _UList):
        return f"L({_u_describe(t.elem)})"
    return "a type variable"


def _from_underlying(u: Underlying, mapping: dict[str, _UVar]) -> object:
    if isinstance(u, IntType):
        return _UINT
    if isinstance(u, TypeVar):
        if u.name not in mapping:
            mapping[u.name] = _UVar()
        return mapping[u.name]
    if isinstance(u, UnderlyingList):
        return _UList(_from_underlying(u.elem, mapping))
    raise TypeError(f"not an underlying type: {u!r}")


class _NameSource:
    def __init__(self) -> None:
        self.names: dict[int, str] = {}
        self.taken: set[str] = set()
        self.counter = 0

    def assign(self, v: _UVar, name: str) -> None:
        self.names[v.id] = name
        self.taken.add(name)

    def name_of(self, v: _UVar) -> str:
        while v.id not in self.names:
            letters = "abcdefghijklmnopqrstuvwxyz"
            n = self.counter
            self.counter += 1
            name = letters[n % 26] + (str(n // 26) if n >= 26 else "")
            if name in self.taken:
                continue
            self.assign(v, name)
        return self.names[v.id]


def _resolve(t: object, names: _NameSource) -> Underlying:
    t = _find(t)
    if t is _UINT:
        return INT
    if isinstance(t, _UList):
        return UnderlyingList(_resolve(t.elem, names))
    assert isinstance(t, _UVar)
    return TypeVar(names.name_of(t))


class _BodyInference:
    """Unification-based inference over a core-form function body."""

    def __init__(self, fn_schemes: dict[str, tuple[tuple[object, ...], object]],
                 polymorphic: set[str]):
        self.fn_schemes = fn_schemes
        self.polymorphic = polymorphic  # names whose schemes are instantiated per use
        self.nil_nodes: list[tuple[int, object]] = []

    def instantiate(self, fname: str) -> tuple[tuple[object, ...], object]:
        params, result = self.fn_schemes[fname]
        if fname not in self.polymorphic:
            # Recursion (and nested definitions) stay monomorphic while open.
            return params, result
        copies: dict[int, _UVar] = {}

        def copy(t: object) -> object:
            t = _find(t)
            if isinstance(t, _UVar):
                if t.id not in copies:
                    copies[t.id] = _UVar()
                return copies[t.id]
            if isinstance(t, _UList):
                return _UList(copy(t.elem))
            return t

        return tuple(copy(p) for p in params), copy(result)

    def infer(self, e, env: dict[str, object]) -> object:
        from . import syntax

        if isinstance(e, syntax.IntConst):
            return _UINT
        if isinstance(e, syntax.Var):
            return env[e.name]
        if isinstance(e, syntax.Nil):
            t = _UList(_UVar())
            self.nil_nodes.append((id(e), t))
            return t
        if isinstance(e, syntax.BinOp):
            _unify(self.infer(e.left, env), _UINT, e.pos)
            _unify(self.infer(e.right, env), _UINT, e.pos)
            return _UINT
        if isinstance(e, syntax.Cons):
            elem = self.infer(e.head, env)
            t = _UList(elem)
            _unify(self.infer(e.tail, env), t, e.pos)
            return t
        if isinstance(e, syntax.FunApp):
            params, result = self.instantiate(e.fname)
            for formal, arg in zip(params, e.args):
                _unify(formal, self.infer(arg, env), e.pos)
            return result
        if isinstance(e, syntax.Let):
            bound = self.infer(e.bound, env)
            inner = dict(env)
            inner[e.name] = bound
            return self.infer(e.body, inner)
        if isinstance(e, syntax.If):
            _unify(self.infer(e.cond, env), _UINT, e.pos)
            t = self.infer(e.then, env)
            _unify(t, self.infer(e.orelse, env), e.pos)
            return t
        if isinstance(e, syntax.Match):
            elem = _UVar()
            _unify(env[e.scrutinee], _UList(elem), e.pos)
            t = self.infer(e.nil_branch, env)
            inner = dict(env)
            inner[e.head_name] = elem
            inner[e.tail_name] = env[e.scrutinee]
            _unify(t, self.infer(e.cons_branch, inner), e.pos)
            return t
        if isinstance(e, syntax.LetFun):
            # Nested definitions get a fresh scheme and stay monomorphic.
            inner_def = e.fundef
            params = tuple(_UVar() for _ in inner_def.params)
            result = _UVar()
            self.fn_schemes[inner_def.name] = (params, result)
            body_env = dict(zip(inner_def.params, params))
            _unify(self.infer(inner_def.body, body_env), result, inner_def.pos)
            return self.infer(e.body, env)
        if isinstance(e, syntax.LetExtern):
            return self.infer(e.body, env)
        raise TypeError(f"cannot infer a type for surface node {type(e).__name__}; "
                        "run desugar first")


@dataclass
class UnderlyingAnalysis:
    """Per-function unsized types plus types for every nil occurrence."""

    types: dict[str, UnderlyingFun]
    nil_types: dict[str, dict[int, SizedType]]


def infer_underlying(program) -> dict[str, UnderlyingFun]:
    """Most-general unsized first-order types for every function, by unification.

    Recursion is monomorphic within a definition; uses after the definition
    instantiate the generalized type.  Externs contribute their declared
    shapes.
    """
    return underlying_analysis(program, use_declared=False).types


def underlying_analysis(program, use_declared: bool) -> UnderlyingAnalysis:
    schemes: dict[str, tuple[tuple[object, ...], object]] = {}
    declared_names: dict[str, dict[str, _UVar]] = {}
    polymorphic: set[str] = set()

    def scheme_from_ftype(ftype: FirstOrderType) -> tuple[tuple[object, ...], object, dict[str, _UVar]]:
        mapping: dict[str, _UVar] = {}
        params = tuple(_from_underlying(strip_sizes(p), mapping) for p in ftype.params)
        return params, _from_underlying(strip_sizes(ftype.result), mapping), mapping

    for name, ftype in program.externs:
        params, result, mapping = scheme_from_ftype(ftype)
        schemes[name] = (params, result)
        declared_names[name] = mapping
        polymorphic.add(name)
    if use_declared:
        for f in program.functions:
            if f.declared_type is not None:
                params, result, mapping = scheme_from_ftype(f.declared_type)
                schemes[f.name] = (params, result)
                declared_names[f.name] = mapping
                polymorphic.add(f.name)

    resolved: dict[str, UnderlyingFun] = {}
    nil_types: dict[str, dict[int, SizedType]] = {}
    for f in program.functions:
        own_poly = f.name in polymorphic  # declared types stay polymorphic even for recursion
        if f.name not in schemes:
            schemes[f.name] = (tuple(_UVar() for _ in f.params), _UVar())
        params, result = schemes[f.name]
        inference = _BodyInference(dict(schemes), set(polymorphic) if own_poly
                                   else polymorphic - {f.name})
        env = dict(zip(f.params, params))
        _unify(inference.infer(f.body, env), result, f.pos)

        names = _NameSource()
        for var_name, uvar in declared_names.get(f.name, {}).items():
            if _find(uvar) is uvar:
                names.assign(uvar, var_name)
        resolved[f.name] = UnderlyingFun(
            tuple(_resolve(p, names) for p in params), _resolve(result, names))
        nil_types[f.name] = {
            node_id: _to_zero_sized(_resolve(t, names))
            for node_id, t in inference.nil_nodes
        }
        polymorphic.add(f.name)
    return UnderlyingAnalysis(resolved, nil_types)


def _to_zero_sized(u: Underlying) -> SizedType:
    if isinstance(u, UnderlyingList):
        return ListType(_to_zero_sized(u.elem), ZERO)
    assert isinstance(u, (IntType, TypeVar))
    return u


# -- size-variable annotation (inference step 1) ---------------------------------------


@dataclass(frozen=True)
class AnnotatedTemplate:
    """A first-order type with fresh input size variables and unknown outputs.

    Input list positions carry n1..nk (outermost-in, left to right); the
    result has `output_depth` unknown polynomials, outermost first.
    """

    params: tuple[SizedType, ...]
    input_vars: tuple[str, ...]
    result_underlying: Underlying
    output_depth: int

    def result_type(self, polys: Sequence[Polynomial]) -> SizedType:
        if len(polys) != self.output_depth:
            raise ValueError(f"need {self.output_depth} output polynomials, got {len(polys)}")
        u = self.result_underlying
        for _ in range(self.output_depth):
            assert isinstance(u, UnderlyingList)
            u = u.elem
        t: SizedType = u  # type: ignore[assignment]
        for p in reversed(polys):
            t = ListType(t, p)
        return t

    def first_order(self, polys: Sequence[Polynomial]) -> FirstOrderType:
        return FirstOrderType(self.params, self.result_type(polys))


def annotate_with_variables(underlying: UnderlyingFun) -> AnnotatedTemplate:
    counter = itertools.count(1)
    input_vars: list[str] = []

    def annotate(u: Underlying) -> SizedType:
        if isinstance(u, UnderlyingList):
            var = f"n{next(counter)}"
            input_vars.append(var)
            return ListType(annotate(u.elem), Polynomial.variable(var))
        assert isinstance(u, (IntType, TypeVar))
        return u

    params = tuple(annotate(p) for p in underlying.params)
    depth = 0
    u = underlying.result
    while isinstance(u, UnderlyingList):
        depth += 1
        u = u.elem
    return AnnotatedTemplate(params, tuple(input_vars), underlying.result, depth)


# -- type syntax ---------------------------------------------------------------
#
#   ftype := stype {"*" stype} "->" stype
#   stype := "Int" | ident | "L" "(" stype "," poly ")"


def parse_ftype_tokens(parser) -> FirstOrderType:
    params = [_parse_stype(parser)]
    while parser.peek().kind == "*":
        parser.next()
        params.append(_parse_stype(parser))
    parser.expect("->")
    result = _parse_stype(parser)
    return FirstOrderType(tuple(params), result)


def _parse_stype(parser) -> SizedType:
    tok = parser.peek()
    if tok.kind == "Int":
        parser.next()
        return INT
    if tok.kind == "ident":
        parser.next()
        return TypeVar(tok.value)
    if tok.kind == "L":
        parser.next()
        parser.expect("(")
        elem = _parse_stype(parser)
        parser.expect(",")
        size = _parse_poly(parser)
        parser.expect(")")
        return ListType(elem, size)
    from .syntax import ParseError
    raise ParseError(f"expected a type, found {tok.value!r}", tok.pos, ("Int", "L(", "type variable"))


def _parse_poly(parser) -> Polynomial:
    # Adapt the main token stream to the polynomial sub-parser, stopping at
    # the first token the polynomial grammar cannot consume.
    from .syntax import ParseError

    toks: list[tuple[str, str]] = []
    j = parser.i
    depth = 0
    while True:
        tok = parser.tokens[j]
        if tok.kind == "int":
            toks.append(("int", tok.value))
        elif tok.kind == "ident":
            toks.append(("ident", tok.value))
        elif tok.kind in ("+", "-", "*", "/", "^"):
            toks.append((tok.kind, tok.value))
        elif tok.kind == "(":
            depth += 1
            toks.append(("(", "("))
        elif tok.kind == ")" and depth > 0:
            depth -= 1
            toks.append((")", ")"))
        else:
            break
        j += 1
    toks.append(("end", ""))
    try:
        poly, used = parse_poly_tokens(toks, 0)
    except Exception as exc:
        raise ParseError(f"bad size polynomial: {exc}", parser.peek().pos)
    parser.i += used
    return poly


def parse_ftype(text: str) -> FirstOrderType:
    from .syntax import _Parser, tokenize

    parser = _Parser(tokenize(text))
    ftype = parse_ftype_tokens(parser)
    parser.expect("eof")
    return ftype


def parse_sized_type(text: str) -> SizedType:
    from .syntax import _Parser, tokenize

    parser = _Parser(tokenize(text))
    t = _parse_stype(parser)
    parser.expect("eof")
    return t
