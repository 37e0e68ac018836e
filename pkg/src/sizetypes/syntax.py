"""Concrete syntax and AST for the list language.

Source files hold a chain of ``letfun``/``letextern`` definitions, each
optionally preceded by a type annotation line, followed by an optional
``main`` expression.  The surface syntax is sugared: call, cons and binop
arguments may be compound expressions and ``[e1, ..., en]`` literals are
accepted.  `desugar` hoists every compound argument into a fresh let so the
result uses only variables in argument positions (the core form consumed by
the checker and the inference machinery).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

Pos = tuple[int, int]

KEYWORDS = {
    "letfun", "letextern", "let", "in", "if", "then", "else",
    "match", "with", "nil", "cons", "main", "div", "mod", "Int", "L",
}

BINOPS = ("+", "-", "div", "mod")


class ParseError(Exception):
    def __init__(self, message: str, pos: Pos, expected: tuple[str, ...] = ()):
        loc = f"{pos[0]}:{pos[1]}"
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{loc}: {message}{detail}")
        self.message = message
        self.pos = pos
        self.expected = expected


class ScopeError(Exception):
    def __init__(self, message: str, pos: Pos):
        super().__init__(f"{pos[0]}:{pos[1]}: {message}")
        self.message = message
        self.pos = pos


@dataclass(frozen=True)
class RestrictionViolation:
    """A pattern match on a variable that is not chained to a parameter."""

    function: str
    scrutinee: str
    pos: Pos

    def __str__(self) -> str:
        return (f"{self.pos[0]}:{self.pos[1]}: in {self.function!r}, match on "
                f"{self.scrutinee!r}, which is not a parameter or match binder")


# -- AST ----------------------------------------------------------------------


@dataclass(eq=True)
class Expr:
    pos: Pos = field(default=(0, 0), compare=False, kw_only=True)


@dataclass(eq=True)
class IntConst(Expr):
    value: int


@dataclass(eq=True)
class Var(Expr):
    name: str


@dataclass(eq=True)
class BinOp(Expr):
    op: str  # one of BINOPS
    left: Expr
    right: Expr


@dataclass(eq=True)
class Nil(Expr):
    pass


@dataclass(eq=True)
class Cons(Expr):
    head: Expr
    tail: Expr


@dataclass(eq=True)
class ListLit(Expr):
    """Surface-only bracket literal; removed by desugaring."""

    items: tuple[Expr, ...]


@dataclass(eq=True)
class FunApp(Expr):
    fname: str
    args: tuple[Expr, ...]


@dataclass(eq=True)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr


@dataclass(eq=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(eq=True)
class Match(Expr):
    scrutinee: str
    head_name: str
    tail_name: str
    nil_branch: Expr
    cons_branch: Expr


@dataclass(eq=True)
class LetFun(Expr):
    fundef: "FunDef"
    body: Expr


@dataclass(eq=True)
class LetExtern(Expr):
    fname: str
    arity: int
    body: Expr


@dataclass(eq=True)
class FunDef:
    name: str
    params: tuple[str, ...]
    body: Expr
    declared_type: Optional[object] = None  # FirstOrderType when annotated
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(eq=True)
class Program:
    functions: tuple[FunDef, ...]
    externs: tuple[tuple[str, object], ...] = ()  # (name, FirstOrderType)
    main: Optional[Expr] = None

    def function(self, name: str) -> FunDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def function_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.functions)


def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, BinOp):
        yield e.left
        yield e.right
    elif isinstance(e, Cons):
        yield e.head
        yield e.tail
    elif isinstance(e, ListLit):
        yield from e.items
    elif isinstance(e, FunApp):
        yield from e.args
    elif isinstance(e, Let):
        yield e.bound
        yield e.body
    elif isinstance(e, If):
        yield e.cond
        yield e.then
        yield e.orelse
    elif isinstance(e, Match):
        yield e.nil_branch
        yield e.cons_branch
    elif isinstance(e, LetFun):
        yield e.fundef.body
        yield e.body
    elif isinstance(e, LetExtern):
        yield e.body


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Match):
        fv = frozenset({e.scrutinee}) | free_vars(e.nil_branch)
        fv |= free_vars(e.cons_branch) - {e.head_name, e.tail_name}
        return fv
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if isinstance(e, LetFun):
        inner = free_vars(e.fundef.body) - set(e.fundef.params)
        return inner | free_vars(e.body)
    fv: frozenset[str] = frozenset()
    for child in children(e):
        fv |= free_vars(child)
    return fv


# -- lexer --------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", a keyword, or a punctuation string
    value: str
    pos: Pos


_PUNCT = ("->", "(", ")", "[", "]", ",", ":", "|", "=", "+", "-", "*", "/", "^")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_INT_RE = re.compile(r"\d+")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        pos = (line, col)
        m = _IDENT_RE.match(text, i)
        if m:
            word = m.group()
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, pos))
            i = m.end()
            col += len(word)
            continue
        m = _INT_RE.match(text, i)
        if m:
            tokens.append(Token("int", m.group(), pos))
            col += len(m.group())
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token(p, p, pos))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(Token("eof", "", (line, col)))
    return tokens


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"unexpected {tok.value or 'end of input'!r}", tok.pos, (kind,))
        return self.next()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected an identifier, found {tok.value or 'end of input'!r}",
                             tok.pos, ("identifier",))
        return self.next()

    # .. program ..............................................................

    def program(self) -> Program:
        from . import typesys

        annotations: dict[str, tuple[object, Pos]] = {}
        functions: list[FunDef] = []
        externs: list[tuple[str, object]] = []
        extern_arity: dict[str, Pos] = {}
        main: Optional[Expr] = None

        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind == "ident" and self.peek(1).kind == ":":
                name = self.ident()
                self.expect(":")
                ftype = typesys.parse_ftype_tokens(self)
                if name.value in annotations:
                    raise ParseError(f"duplicate annotation for {name.value!r}", name.pos)
                annotations[name.value] = (ftype, name.pos)
                continue
            if tok.kind == "letfun":
                functions.append(self.letfun())
                continue
            if tok.kind == "letextern":
                name, arity = self.letextern()
                extern_arity[name.value] = name.pos
                externs.append((name.value, arity))
                continue
            if tok.kind == "main":
                self.next()
                self.expect("=")
                main = self.expr()
                break
            # Bare trailing expression: treated as the main expression.
            main = self.expr()
            break
        self.expect("eof")

        seen: set[str] = set()
        for f in functions:
            if f.name in seen:
                raise ParseError(f"duplicate definition of function {f.name!r}", f.pos)
            seen.add(f.name)
        for name, _ in externs:
            if name in seen:
                raise ParseError(f"duplicate definition of function {name!r}",
                                 extern_arity[name])
            seen.add(name)

        resolved_externs: list[tuple[str, object]] = []
        for name, arity in externs:
            if name not in annotations:
                raise ParseError(f"extern {name!r} needs a type annotation line",
                                 extern_arity[name])
            ftype, apos = annotations.pop(name)
            if len(ftype.params) != arity:
                raise ParseError(
                    f"annotation for {name!r} has {len(ftype.params)} parameter(s), "
                    f"declaration has {arity}", apos)
            resolved_externs.append((name, ftype))

        annotated: list[FunDef] = []
        for f in functions:
            if f.name in annotations:
                ftype, apos = annotations.pop(f.name)
                if len(ftype.params) != len(f.params):
                    raise ParseError(
                        f"annotation for {f.name!r} has {len(ftype.params)} parameter(s), "
                        f"definition has {len(f.params)}", apos)
                f = replace(f, declared_type=ftype)
            annotated.append(f)
        if annotations:
            name, (_, apos) = next(iter(annotations.items()))
            raise ParseError(f"annotation for unknown function {name!r}", apos)

        return Program(tuple(annotated), tuple(resolved_externs), main)

    def letfun(self) -> FunDef:
        start = self.expect("letfun")
        name = self.ident()
        params = self.param_list()
        self.expect("=")
        body = self.expr()
        self.expect("in")
        return FunDef(name.value, params, body, pos=start.pos)

    def letextern(self) -> tuple[Token, int]:
        self.expect("letextern")
        name = self.ident()
        params = self.param_list()
        self.expect("in")
        return name, len(params)

    def param_list(self) -> tuple[str, ...]:
        self.expect("(")
        params = [self.ident().value]
        while self.peek().kind == ",":
            self.next()
            params.append(self.ident().value)
        self.expect(")")
        if len(set(params)) != len(params):
            raise ParseError("parameter names must be distinct", self.peek().pos)
        return tuple(params)

    # .. expressions ..........................................................

    def expr(self) -> Expr:
        tok = self.peek()
        if tok.kind == "let":
            self.next()
            name = self.ident()
            self.expect("=")
            bound = self.simple_expr()
            self.expect("in")
            body = self.expr()
            return Let(name.value, bound, body, pos=tok.pos)
        if tok.kind == "if":
            self.next()
            cond = self.simple_expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return If(cond, then, orelse, pos=tok.pos)
        if tok.kind == "match":
            return self.match()
        if tok.kind == "letfun":
            fundef = self.letfun()
            return LetFun(fundef, self.expr(), pos=tok.pos)
        if tok.kind == "letextern":
            name, arity = self.letextern()
            return LetExtern(name.value, arity, self.expr(), pos=tok.pos)
        return self.simple_expr()

    def match(self) -> Expr:
        start = self.expect("match")
        scrutinee = self.ident()
        self.expect("with")
        self.expect("|")
        self.expect("nil")
        self.expect("->")
        nil_branch = self.expr()
        self.expect("|")
        self.expect("cons")
        self.expect("(")
        head = self.ident()
        self.expect(",")
        tail = self.ident()
        self.expect(")")
        self.expect("->")
        cons_branch = self.expr()
        return Match(scrutinee.value, head.value, tail.value, nil_branch, cons_branch,
                     pos=start.pos)

    def simple_expr(self) -> Expr:
        left = self.atom()
        tok = self.peek()
        if tok.kind in ("+", "-", "div", "mod"):
            self.next()
            right = self.atom()
            return BinOp(tok.kind, left, right, pos=tok.pos)
        return left

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return IntConst(int(tok.value), pos=tok.pos)
        if tok.kind == "nil":
            self.next()
            return Nil(pos=tok.pos)
        if tok.kind == "cons":
            self.next()
            self.expect("(")
            head = self.simple_expr()
            self.expect(",")
            tail = self.simple_expr()
            self.expect(")")
            return Cons(head, tail, pos=tok.pos)
        if tok.kind == "[":
            self.next()
            items: list[Expr] = []
            if self.peek().kind != "]":
                items.append(self.simple_expr())
                while self.peek().kind == ",":
                    self.next()
                    items.append(self.simple_expr())
            self.expect("]")
            return ListLit(tuple(items), pos=tok.pos)
        if tok.kind == "(":
            self.next()
            inner = self.simple_expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            self.next()
            if self.peek().kind == "(":
                self.next()
                args: list[Expr] = []
                if self.peek().kind != ")":
                    args.append(self.simple_expr())
                    while self.peek().kind == ",":
                        self.next()
                        args.append(self.simple_expr())
                self.expect(")")
                return FunApp(tok.value, tuple(args), pos=tok.pos)
            return Var(tok.value, pos=tok.pos)
        raise ParseError(f"unexpected {tok.value or 'end of input'!r}", tok.pos,
                         ("integer", "nil", "cons", "identifier", "(", "["))


def parse_program(text: str) -> Program:
    return _Parser(tokenize(text)).program()


def parse_expr(text: str) -> Expr:
    parser = _Parser(tokenize(text))
    e = parser.expr()
    parser.expect("eof")
    return e


# -- scope checking -----------------------------------------------------------


def scope_check(program: Program) -> None:
    """Reject unbound variables, shadowing, unknown callees and bad arities.

    Functions may call themselves, previously defined functions and externs
    (the definition chain never looks forward).
    """
    arities: dict[str, int] = {name: len(ft.params) for name, ft in program.externs}

    def walk(e: Expr, env: frozenset[str], fenv: dict[str, int], fname: str) -> None:
        if isinstance(e, Var):
            if e.name not in env:
                raise ScopeError(f"unbound variable {e.name!r} in {fname}", e.pos)
        elif isinstance(e, Let):
            walk(e.bound, env, fenv, fname)
            if e.name in env:
                raise ScopeError(f"{e.name!r} shadows an existing binding in {fname}", e.pos)
            walk(e.body, env | {e.name}, fenv, fname)
        elif isinstance(e, Match):
            if e.scrutinee not in env:
                raise ScopeError(f"unbound variable {e.scrutinee!r} in {fname}", e.pos)
            walk(e.nil_branch, env, fenv, fname)
            for binder in (e.head_name, e.tail_name):
                if binder in env:
                    raise ScopeError(f"{binder!r} shadows an existing binding in {fname}", e.pos)
            if e.head_name == e.tail_name:
                raise ScopeError("match binders must be distinct", e.pos)
            walk(e.cons_branch, env | {e.head_name, e.tail_name}, fenv, fname)
        elif isinstance(e, FunApp):
            if e.fname not in fenv:
                raise ScopeError(f"call to unknown function {e.fname!r} in {fname}", e.pos)
            if fenv[e.fname] != len(e.args):
                raise ScopeError(
                    f"{e.fname!r} takes {fenv[e.fname]} argument(s), got {len(e.args)}", e.pos)
            for a in e.args:
                walk(a, env, fenv, fname)
        elif isinstance(e, LetFun):
            inner = e.fundef
            fv = free_vars(inner.body) - set(inner.params)
            sub_fenv = dict(fenv)
            sub_fenv[inner.name] = len(inner.params)
            if fv:
                raise ScopeError(
                    f"function {inner.name!r} refers to non-parameters: {sorted(fv)}", inner.pos)
            walk(inner.body, frozenset(inner.params), sub_fenv, inner.name)
            walk(e.body, env, sub_fenv, fname)
        elif isinstance(e, LetExtern):
            sub_fenv = dict(fenv)
            sub_fenv[e.fname] = e.arity
            walk(e.body, env, sub_fenv, fname)
        else:
            for child in children(e):
                walk(child, env, fenv, fname)

    for f in program.functions:
        fenv = dict(arities)
        fenv[f.name] = len(f.params)
        fv = free_vars(f.body) - set(f.params)
        if fv:
            raise ScopeError(f"function {f.name!r} refers to non-parameters: {sorted(fv)}", f.pos)
        walk(f.body, frozenset(f.params), fenv, f.name)
        arities[f.name] = len(f.params)
    if program.main is not None:
        walk(program.main, frozenset(), dict(arities), "main")


# -- desugaring ---------------------------------------------------------------


class _FreshNames:
    """Generator of reserved names; user identifiers cannot contain '$'."""

    def __init__(self) -> None:
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"${self.counter}"


def desugar(program: Program) -> Program:
    """Hoist compound arguments into fresh lets, producing the core form.

    Deterministic: arguments are flattened left to right, list literals are
    expanded into cons chains.  Idempotent on core-form programs.
    """
    functions = tuple(
        replace(f, body=_desugar_body(f.body)) for f in program.functions
    )
    main = _desugar_body(program.main) if program.main is not None else None
    return Program(functions, program.externs, main)


def _desugar_body(body: Expr) -> Expr:
    return _desugar_expr(body, _FreshNames())


def _desugar_expr(e: Expr, fresh: _FreshNames) -> Expr:
    if isinstance(e, (IntConst, Var, Nil)):
        return e
    if isinstance(e, Let):
        bindings, basic = _flatten_basic(e.bound, fresh)
        return _wrap(bindings, Let(e.name, basic, _desugar_expr(e.body, fresh), pos=e.pos))
    if isinstance(e, If):
        bindings, cond = _flatten_to_var(e.cond, fresh)
        return _wrap(bindings, If(cond, _desugar_expr(e.then, fresh),
                                  _desugar_expr(e.orelse, fresh), pos=e.pos))
    if isinstance(e, Match):
        return Match(e.scrutinee, e.head_name, e.tail_name,
                     _desugar_expr(e.nil_branch, fresh),
                     _desugar_expr(e.cons_branch, fresh), pos=e.pos)
    if isinstance(e, LetFun):
        inner = replace(e.fundef, body=_desugar_body(e.fundef.body))
        return LetFun(inner, _desugar_expr(e.body, fresh), pos=e.pos)
    if isinstance(e, LetExtern):
        return LetExtern(e.fname, e.arity, _desugar_expr(e.body, fresh), pos=e.pos)
    bindings, basic = _flatten_basic(e, fresh)
    return _wrap(bindings, basic)


def _wrap(bindings: list[tuple[str, Expr]], body: Expr) -> Expr:
    for name, bound in reversed(bindings):
        body = Let(name, bound, body, pos=bound.pos)
    return body


def _flatten_basic(e: Expr, fresh: _FreshNames) -> tuple[list[tuple[str, Expr]], Expr]:
    """Rewrite to a core basic form, collecting hoisted bindings in order."""
    if isinstance(e, (IntConst, Var, Nil)):
        return [], e
    if isinstance(e, BinOp):
        bs1, left = _flatten_to_var(e.left, fresh)
        bs2, right = _flatten_to_var(e.right, fresh)
        return bs1 + bs2, BinOp(e.op, left, right, pos=e.pos)
    if isinstance(e, Cons):
        bs1, head = _flatten_to_var(e.head, fresh)
        bs2, tail = _flatten_to_var(e.tail, fresh)
        return bs1 + bs2, Cons(head, tail, pos=e.pos)
    if isinstance(e, FunApp):
        bindings: list[tuple[str, Expr]] = []
        args: list[Expr] = []
        for a in e.args:
            bs, v = _flatten_to_var(a, fresh)
            bindings += bs
            args.append(v)
        return bindings, FunApp(e.fname, tuple(args), pos=e.pos)
    if isinstance(e, ListLit):
        bindings = []
        item_vars: list[Expr] = []
        for item in e.items:
            bs, v = _flatten_to_var(item, fresh)
            bindings += bs
            item_vars.append(v)
        chain: Expr = Nil(pos=e.pos)
        for v in reversed(item_vars):
            name = fresh.fresh()
            bindings.append((name, chain))
            chain = Cons(v, Var(name, pos=e.pos), pos=e.pos)
        return bindings, chain
    raise ParseError("let/if/match cannot appear in argument position", e.pos)


def _flatten_to_var(e: Expr, fresh: _FreshNames) -> tuple[list[tuple[str, Expr]], Expr]:
    if isinstance(e, Var):
        return [], e
    bindings, basic = _flatten_basic(e, fresh)
    name = fresh.fresh()
    bindings.append((name, basic))
    return bindings, Var(name, pos=e.pos)


def is_core_form(e: Expr) -> bool:
    if isinstance(e, ListLit):
        return False
    if isinstance(e, (BinOp, Cons)):
        return all(isinstance(c, Var) for c in children(e))
    if isinstance(e, FunApp):
        return all(isinstance(a, Var) for a in e.args)
    if isinstance(e, If):
        return isinstance(e.cond, Var) and is_core_form(e.then) and is_core_form(e.orelse)
    if isinstance(e, Let):
        return (isinstance(e.bound, (IntConst, Var, Nil, BinOp, Cons, FunApp))
                and is_core_form(e.bound) and is_core_form(e.body))
    return all(is_core_form(c) for c in children(e))


# -- decidability restriction ---------------------------------------------------


def validate_restriction(program: Program) -> list[RestrictionViolation]:
    """Check that every match scrutinee is a parameter or a (transitive) match binder.

    Matching a let-bound variable is reported; such programs fall outside the
    fragment where all emitted size constraints pin a variable to a constant.
    """
    violations: list[RestrictionViolation] = []

    def walk(e: Expr, matchable: frozenset[str], fname: str) -> None:
        if isinstance(e, Match):
            if e.scrutinee not in matchable:
                violations.append(RestrictionViolation(fname, e.scrutinee, e.pos))
            walk(e.nil_branch, matchable, fname)
            walk(e.cons_branch, matchable | {e.head_name, e.tail_name}, fname)
        elif isinstance(e, Let):
            walk(e.bound, matchable, fname)
            walk(e.body, matchable, fname)  # let-bound names are not matchable
        elif isinstance(e, LetFun):
            walk(e.fundef.body, frozenset(e.fundef.params), e.fundef.name)
            walk(e.body, matchable, fname)
        else:
            for child in children(e):
                walk(child, matchable, fname)

    for f in program.functions:
        walk(f.body, frozenset(f.params), f.name)
    if program.main is not None:
        walk(program.main, frozenset(), "main")
    return violations


# -- pretty printing ------------------------------------------------------------


def expr_to_source(e: Expr, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(e, IntConst):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Nil):
        return "nil"
    if isinstance(e, BinOp):
        return f"{_atom_source(e.left)} {e.op} {_atom_source(e.right)}"
    if isinstance(e, Cons):
        return f"cons({expr_to_source(e.head)}, {expr_to_source(e.tail)})"
    if isinstance(e, ListLit):
        return "[" + ", ".join(expr_to_source(x) for x in e.items) + "]"
    if isinstance(e, FunApp):
        return f"{e.fname}(" + ", ".join(expr_to_source(a) for a in e.args) + ")"
    if isinstance(e, Let):
        return (f"let {e.name} = {expr_to_source(e.bound)} in\n"
                f"{pad}{expr_to_source(e.body, indent)}")
    if isinstance(e, If):
        return (f"if {expr_to_source(e.cond)}\n"
                f"{pad}then {expr_to_source(e.then, indent + 1)}\n"
                f"{pad}else {expr_to_source(e.orelse, indent + 1)}")
    if isinstance(e, Match):
        inner = "  " * (indent + 1)
        return (f"match {e.scrutinee} with\n"
                f"{inner}| nil -> {expr_to_source(e.nil_branch, indent + 1)}\n"
                f"{inner}| cons({e.head_name}, {e.tail_name}) -> "
                f"{expr_to_source(e.cons_branch, indent + 1)}")
    if isinstance(e, LetFun):
        f = e.fundef
        return (f"letfun {f.name}({', '.join(f.params)}) = "
                f"{expr_to_source(f.body, indent + 1)} in\n"
                f"{pad}{expr_to_source(e.body, indent)}")
    if isinstance(e, LetExtern):
        params = ", ".join(f"z{i + 1}" for i in range(e.arity))
        return f"letextern {e.fname}({params}) in\n{pad}{expr_to_source(e.body, indent)}"
    raise TypeError(f"unknown expression node {e!r}")


def _atom_source(e: Expr) -> str:
    text = expr_to_source(e)
    return f"({text})" if isinstance(e, BinOp) else text


def to_source(program: Program) -> str:
    blocks: list[str] = []
    for name, ftype in program.externs:
        params = ", ".join(f"z{i + 1}" for i in range(len(ftype.params)))  # type: ignore[attr-defined]
        blocks.append(f"{name} : {ftype}\nletextern {name}({params}) in\n")
    for f in program.functions:
        lines = []
        if f.declared_type is not None:
            lines.append(f"{f.name} : {f.declared_type}")
        lines.append(f"letfun {f.name}({', '.join(f.params)}) =")
        lines.append("  " + expr_to_source(f.body, 1))
        lines.append("in")
        blocks.append("\n".join(lines) + "\n")
    if program.main is not None:
        blocks.append(f"main = {expr_to_source(program.main)}\n")
    return "\n".join(blocks)
