"""First-order predicate and term language shared by guards, constraints, features, and policies.

Expressions are authored as text and parsed into a small AST:

    expr       := quantified | or-chain
    quantified := ("exists" | "forall") VAR ":" TYPE "." expr
    or-chain   := and-chain ("or" and-chain)*
    and-chain  := unary ("and" unary)*
    unary      := "not" unary | quantified | comparison
    comparison := sum (("=" | "!=" | "<" | "<=" | ">" | ">=") sum)?
    sum        := product (("+" | "-") product)*
    product    := postfix ("*" postfix)*
    postfix    := atom ("." ATTR)*
    atom       := NUMBER | "-" NUMBER | STRING | "true" | "false"
                | VAR | REL "(" expr ("," expr)* ")" | "(" expr ")"

Unicode spellings are accepted and normalized before lexing
(`∃`/`∀`/`≠`/`≤`/`≥`/`×`/`∧`/`∨`/`¬`), and `==` is an alias for `=`.
String literals use single or double quotes, no escapes.  Relation
membership `Rel(x, y)` tests a tuple against the state; quantifiers
range over live entities of one declared type, innermost candidates
enumerated in ascending id order.

Typechecking is against a schema plus an environment of bound variable
types.  Equality is defined on matching kinds only (numbers with
numbers, entities of the same type with each other); ordering is
defined on numbers and plain strings, never on enums or booleans.
Evaluation is total on well-typed expressions over consistent states.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

from .errors import EvalError

if TYPE_CHECKING:  # only for annotations; schema.py imports this module
    from .schema import Schema
    from .state import WorldState


# -- types -------------------------------------------------------------------

@dataclass(frozen=True)
class Type:
    """Static type of a term: int / real / bool / str / enum / entity."""

    kind: str
    enum_values: frozenset[str] | None = None
    entity_type: str | None = None

    def __str__(self) -> str:
        if self.kind == "enum":
            return "enum(" + "|".join(sorted(self.enum_values or ())) + ")"
        if self.kind == "entity":
            return f"entity({self.entity_type})"
        return self.kind


T_INT = Type("int")
T_REAL = Type("real")
T_BOOL = Type("bool")
T_STR = Type("str")


def is_numeric(t: Type) -> bool:
    return t.kind in ("int", "real")


def is_stringlike(t: Type) -> bool:
    return t.kind in ("str", "enum")


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: object  # int | float | bool | str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Attr:
    obj: object
    attr: str


@dataclass(frozen=True)
class Compare:
    op: str  # = != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class BoolOp:
    op: str  # and | or
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Quant:
    kind: str  # exists | forall
    var: str
    type_name: str
    body: object


@dataclass(frozen=True)
class Arith:
    op: str  # + - *
    left: object
    right: object


Expr = object  # any of the node classes above


# -- lexer -------------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message: str, pos: int) -> None:
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


_UNICODE_ALIASES = {
    "∃": " exists ",
    "∀": " forall ",
    "≠": "!=",
    "≤": "<=",
    "≥": ">=",
    "×": "*",
    "∧": " and ",
    "∨": " or ",
    "¬": " not ",
}

_KEYWORDS = {"and", "or", "not", "exists", "forall", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<op><=|>=|!=|==|[=<>+\-*().:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number name string op keyword
    text: str
    pos: int


def _lex(source: str) -> list[_Token]:
    for raw, alias in _UNICODE_ALIASES.items():
        if raw in source:
            source = source.replace(raw, alias)
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            kind = m.lastgroup or ""
            text = m.group()
            if kind == "name" and text in _KEYWORDS:
                kind = "keyword"
            if kind == "op" and text == "==":
                text = "="
            tokens.append(_Token(kind, text, pos))
        pos = m.end()
    return tokens


# -- parser ------------------------------------------------------------------

_CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}


class _Parser:
    def __init__(self, tokens: list[_Token], source: str) -> None:
        self.tokens = tokens
        self.source = source
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", len(self.source))
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def parse(self) -> Expr:
        expr = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input starting at {tok.text!r}", tok.pos)
        return expr

    def expr(self) -> Expr:
        if self.at("keyword", "exists") or self.at("keyword", "forall"):
            return self.quantified()
        return self.or_chain()

    def quantified(self) -> Expr:
        kind = self.next().text
        var = self.next()
        if var.kind != "name":
            raise ParseError("expected a variable name after quantifier", var.pos)
        self.expect(":")
        type_name = self.next()
        if type_name.kind != "name":
            raise ParseError("expected an entity type name after ':'", type_name.pos)
        self.expect(".")
        return Quant(kind, var.text, type_name.text, self.expr())

    def or_chain(self) -> Expr:
        items = [self.and_chain()]
        while self.at("keyword", "or"):
            self.next()
            items.append(self.and_chain())
        return items[0] if len(items) == 1 else BoolOp("or", tuple(items))

    def and_chain(self) -> Expr:
        items = [self.unary()]
        while self.at("keyword", "and"):
            self.next()
            items.append(self.unary())
        return items[0] if len(items) == 1 else BoolOp("and", tuple(items))

    def unary(self) -> Expr:
        if self.at("keyword", "not"):
            self.next()
            return Not(self.unary())
        if self.at("keyword", "exists") or self.at("keyword", "forall"):
            return self.quantified()
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.sum()
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in _CMP_OPS:
            self.next()
            return Compare(tok.text, left, self.sum())
        return left

    def sum(self) -> Expr:
        node = self.product()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.next().text
            node = Arith(op, node, self.product())
        return node

    def product(self) -> Expr:
        node = self.postfix()
        while self.at("op", "*"):
            self.next()
            node = Arith("*", node, self.postfix())
        return node

    def postfix(self) -> Expr:
        node = self.atom()
        while self.at("op", "."):
            self.next()
            attr = self.next()
            if attr.kind != "name":
                raise ParseError("expected an attribute name after '.'", attr.pos)
            node = Attr(node, attr.text)
        return node

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "number":
            return Const(float(tok.text) if "." in tok.text else int(tok.text))
        if tok.kind == "op" and tok.text == "-":
            num = self.next()
            if num.kind != "number":
                raise ParseError("'-' is only allowed before a number literal", num.pos)
            return Const(-float(num.text) if "." in num.text else -int(num.text))
        if tok.kind == "string":
            return Const(tok.text[1:-1])
        if tok.kind == "keyword" and tok.text in ("true", "false"):
            return Const(tok.text == "true")
        if tok.kind == "name":
            if self.at("op", "("):
                self.next()
                args = [self.expr()]
                while self.at("op", ","):
                    self.next()
                    args.append(self.expr())
                self.expect(")")
                return Rel(tok.text, tuple(args))
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)


def parse_expr(source: str) -> Expr:
    """Parse expression text into an AST.  Raises ParseError on bad syntax."""
    return _Parser(_lex(source), source).parse()


# -- typechecker -------------------------------------------------------------

class TypeCheckError(ValueError):
    pass


@dataclass
class UsedVocabulary:
    """Schema vocabulary an expression touches; filled in during typechecking."""

    entity_types: set[str]
    attributes: set[tuple[str, str]]
    relations: set[str]

    @classmethod
    def empty(cls) -> "UsedVocabulary":
        return cls(set(), set(), set())


def typecheck(
    expr: Expr,
    schema: "Schema",
    env: dict[str, Type],
    *,
    used: UsedVocabulary | None = None,
) -> Type:
    """Infer the type of ``expr`` against ``schema`` with variables typed by ``env``.

    Enforces the schema's quantifier depth cap.  When ``used`` is given,
    records every entity type quantified over, attribute read, and
    relation tested, for visibility checks.
    """
    return _check(expr, schema, dict(env), 0, used)


def _check(
    expr: Expr,
    schema: "Schema",
    env: dict[str, Type],
    depth: int,
    used: UsedVocabulary | None,
) -> Type:
    if isinstance(expr, Const):
        v = expr.value
        if isinstance(v, bool):
            return T_BOOL
        if isinstance(v, int):
            return T_INT
        if isinstance(v, float):
            return T_REAL
        return T_STR
    if isinstance(expr, Var):
        ty = env.get(expr.name)
        if ty is None:
            raise TypeCheckError(f"unbound variable {expr.name!r}")
        if used is not None and ty.kind == "entity" and ty.entity_type:
            used.entity_types.add(ty.entity_type)
        return ty
    if isinstance(expr, Attr):
        obj_ty = _check(expr.obj, schema, env, depth, used)
        if obj_ty.kind != "entity":
            raise TypeCheckError(f"attribute access on non-entity term of type {obj_ty}")
        attrs = schema.entity_types.get(obj_ty.entity_type or "")
        if attrs is None or expr.attr not in attrs:
            raise TypeCheckError(f"entity type {obj_ty.entity_type!r} has no attribute {expr.attr!r}")
        if used is not None:
            used.attributes.add((obj_ty.entity_type or "", expr.attr))
        return attrs[expr.attr].value_type()
    if isinstance(expr, Compare):
        lt = _check(expr.left, schema, env, depth, used)
        rt = _check(expr.right, schema, env, depth, used)
        _check_comparable(expr, lt, rt)
        return T_BOOL
    if isinstance(expr, BoolOp):
        for item in expr.items:
            _require_bool(_check(item, schema, env, depth, used), f"operand of {expr.op!r}")
        return T_BOOL
    if isinstance(expr, Not):
        _require_bool(_check(expr.item, schema, env, depth, used), "operand of 'not'")
        return T_BOOL
    if isinstance(expr, Rel):
        rel = schema.relation_types.get(expr.name)
        if rel is None:
            raise TypeCheckError(f"relation type {expr.name!r} is not declared")
        if len(expr.args) != len(rel.roles):
            raise TypeCheckError(
                f"relation {expr.name!r} takes {len(rel.roles)} entities, got {len(expr.args)}"
            )
        for arg, (role_name, type_name) in zip(expr.args, rel.roles):
            arg_ty = _check(arg, schema, env, depth, used)
            if arg_ty.kind != "entity" or arg_ty.entity_type != type_name:
                raise TypeCheckError(
                    f"role {role_name!r} of relation {expr.name!r} requires {type_name}, got {arg_ty}"
                )
        if used is not None:
            used.relations.add(expr.name)
        return T_BOOL
    if isinstance(expr, Quant):
        if depth + 1 > schema.max_quantifier_depth:
            raise TypeCheckError(
                f"quantifier depth exceeds the cap of {schema.max_quantifier_depth}"
            )
        if expr.type_name not in schema.entity_types:
            raise TypeCheckError(f"quantifier over undeclared entity type {expr.type_name!r}")
        if used is not None:
            used.entity_types.add(expr.type_name)
        inner = dict(env)
        inner[expr.var] = Type("entity", entity_type=expr.type_name)
        _require_bool(_check(expr.body, schema, inner, depth + 1, used), "quantifier body")
        return T_BOOL
    if isinstance(expr, Arith):
        lt = _check(expr.left, schema, env, depth, used)
        rt = _check(expr.right, schema, env, depth, used)
        if not (is_numeric(lt) and is_numeric(rt)):
            raise TypeCheckError(f"arithmetic {expr.op!r} needs numbers, got {lt} and {rt}")
        return T_INT if lt.kind == "int" and rt.kind == "int" else T_REAL
    raise TypeCheckError(f"unknown expression node {type(expr).__name__}")


def _require_bool(ty: Type, where: str) -> None:
    if ty.kind != "bool":
        raise TypeCheckError(f"{where} must be boolean, got {ty}")


def _check_comparable(node: Compare, lt: Type, rt: Type) -> None:
    ordering = node.op in ("<", "<=", ">", ">=")
    if is_numeric(lt) and is_numeric(rt):
        return
    if ordering:
        if lt.kind == "str" and rt.kind == "str":
            return
        raise TypeCheckError(f"ordering {node.op!r} is not defined on {lt} and {rt}")
    if lt.kind == "bool" and rt.kind == "bool":
        return
    if is_stringlike(lt) and is_stringlike(rt):
        _check_enum_literal(node.left, rt)
        _check_enum_literal(node.right, lt)
        return
    if lt.kind == "entity" and rt.kind == "entity":
        if lt.entity_type != rt.entity_type:
            raise TypeCheckError(
                f"entity comparison across types {lt.entity_type!r} and {rt.entity_type!r}"
            )
        return
    raise TypeCheckError(f"comparison {node.op!r} between {lt} and {rt}")


def _check_enum_literal(other_side: Expr, this_ty: Type) -> None:
    # A string literal compared against an enum must name one of its values.
    if this_ty.kind != "enum" or not isinstance(other_side, Const):
        return
    v = other_side.value
    if isinstance(v, str) and v not in (this_ty.enum_values or frozenset()):
        raise TypeCheckError(f"{v!r} is not a value of {this_ty}")


# -- evaluator ---------------------------------------------------------------

def entity_order_key(entity_id: str) -> tuple[int, str]:
    """Canonical entity ordering: numeric for engine ids e1, e2, ..., total for any string."""
    return (len(entity_id), entity_id)


def _entities_of_type(state: "WorldState", type_name: str) -> Iterator[str]:
    ids = [eid for eid, inst in state.entities.items() if inst.type_name == type_name]
    ids.sort(key=entity_order_key)
    return iter(ids)


def eval_term(expr: Expr, state: "WorldState", bindings: dict[str, object]) -> object:
    """Evaluate a term or predicate to its value.  Never mutates the state."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            return bindings[expr.name]
        except KeyError:
            raise EvalError(f"unbound variable {expr.name!r}") from None
    if isinstance(expr, Attr):
        eid = eval_term(expr.obj, state, bindings)
        inst = state.entities.get(eid)  # type: ignore[arg-type]
        if inst is None:
            raise EvalError(f"entity {eid!r} does not exist")
        try:
            return inst.attrs[expr.attr]
        except KeyError:
            raise EvalError(f"entity {eid!r} has no attribute {expr.attr!r}") from None
    if isinstance(expr, Compare):
        left = eval_term(expr.left, state, bindings)
        right = eval_term(expr.right, state, bindings)
        if expr.op == "=":
            return left == right
        if expr.op == "!=":
            return left != right
        if expr.op == "<":
            return left < right  # type: ignore[operator]
        if expr.op == "<=":
            return left <= right  # type: ignore[operator]
        if expr.op == ">":
            return left > right  # type: ignore[operator]
        return left >= right  # type: ignore[operator]
    if isinstance(expr, BoolOp):
        if expr.op == "and":
            return all(eval_term(item, state, bindings) for item in expr.items)
        return any(eval_term(item, state, bindings) for item in expr.items)
    if isinstance(expr, Not):
        return not eval_term(expr.item, state, bindings)
    if isinstance(expr, Rel):
        ids = tuple(eval_term(arg, state, bindings) for arg in expr.args)
        return (expr.name, *ids) in state.relations
    if isinstance(expr, Quant):
        hits = (
            eval_term(expr.body, state, {**bindings, expr.var: eid})
            for eid in _entities_of_type(state, expr.type_name)
        )
        return any(hits) if expr.kind == "exists" else all(hits)
    if isinstance(expr, Arith):
        left = eval_term(expr.left, state, bindings)
        right = eval_term(expr.right, state, bindings)
        if expr.op == "+":
            return left + right  # type: ignore[operator]
        if expr.op == "-":
            return left - right  # type: ignore[operator]
        return left * right  # type: ignore[operator]
    raise EvalError(f"unknown expression node {type(expr).__name__}")


def eval_predicate(state: "WorldState", expr: Expr, bindings: dict[str, object] | None = None) -> bool:
    """Evaluate a boolean expression on a state; deterministic, read-only."""
    value = eval_term(expr, state, bindings or {})
    if not isinstance(value, bool):
        raise EvalError(f"expression evaluated to {type(value).__name__}, expected a boolean")
    return value
