"""Schema layer: entity types, relation types, guarded actions, and named constraints.

A schema is built from a JSON-style document and fully validated up
front: every reference a guard, effect, or constraint makes must resolve
against declared vocabulary, so later evaluation can assume
well-typedness.  Validation failures raise SchemaError naming the
offending declaration.

Document shape::

    {
      "name": "bank",                      # optional world name
      "maxQuantifierDepth": 3,             # optional, default 3
      "entityTypes": {"Account": {"balance": "integer",
                                  "tier": {"enum": ["basic", "gold"]},
                                  "owner": {"ref": "Customer"}}},
      "relationTypes": {"Owns": [{"name": "who", "type": "Customer"},
                                 {"name": "what", "type": "Account"}]},
      "actions": {"deposit": {"params": [{"name": "acct", "type": {"ref": "Account"}},
                                          {"name": "amount", "type": "integer"}],
                               "guard": "amount > 0",
                               "effects": [{"op": "setAttribute", "entity": "acct",
                                            "attr": "balance",
                                            "value": "acct.balance + amount"}]}},
      "constraints": [{"name": "no-overdraft",
                        "expr": "forall a: Account. a.balance >= 0"}]
    }

Effect operations: ``createEntity`` (with ``type``, ``attrs``, optional
``as`` binder usable by later effects), ``deleteEntity`` (``entity``),
``setAttribute`` (``entity``, ``attr``, ``value``), ``addRelationTuple``
and ``removeRelationTuple`` (``relation``, ``entities``).  Effect
expressions see the action's parameters plus earlier ``as`` binders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import predicate
from .errors import SchemaError
from .predicate import Const, Expr, ParseError, Type, TypeCheckError

SCALAR_DOMAINS = ("integer", "real", "boolean", "string")


@dataclass(frozen=True)
class Domain:
    """Value domain of an attribute or parameter."""

    kind: str  # integer | real | boolean | string | enum | ref
    values: tuple[str, ...] = ()
    target: str = ""

    def value_type(self) -> Type:
        if self.kind == "integer":
            return predicate.T_INT
        if self.kind == "real":
            return predicate.T_REAL
        if self.kind == "boolean":
            return predicate.T_BOOL
        if self.kind == "string":
            return predicate.T_STR
        if self.kind == "enum":
            return Type("enum", enum_values=frozenset(self.values))
        return Type("entity", entity_type=self.target)

    def render(self) -> str:
        if self.kind == "enum":
            return "enum(" + "|".join(self.values) + ")"
        if self.kind == "ref":
            return f"ref({self.target})"
        return self.kind


@dataclass(frozen=True)
class Param:
    name: str
    domain: Domain


@dataclass(frozen=True)
class CreateEffect:
    type_name: str
    attrs: dict[str, Expr]
    binder: str | None = None


@dataclass(frozen=True)
class DeleteEffect:
    entity: Expr


@dataclass(frozen=True)
class SetEffect:
    entity: Expr
    attr: str
    value: Expr


@dataclass(frozen=True)
class AddRelationEffect:
    relation: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class RemoveRelationEffect:
    relation: str
    args: tuple[Expr, ...]


Effect = CreateEffect | DeleteEffect | SetEffect | AddRelationEffect | RemoveRelationEffect


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple[Param, ...]
    guard: Expr
    guard_text: str
    effects: tuple[Effect, ...]

    def param_env(self) -> dict[str, Type]:
        return {p.name: p.domain.value_type() for p in self.params}


@dataclass(frozen=True)
class RelationType:
    name: str
    roles: tuple[tuple[str, str], ...]  # (roleName, entityTypeName), ordered


@dataclass(frozen=True)
class Constraint:
    name: str
    expr: Expr
    text: str


@dataclass
class Schema:
    """Validated world schema; treat as immutable once built."""

    name: str = "world"
    entity_types: dict[str, dict[str, Domain]] = field(default_factory=dict)
    relation_types: dict[str, RelationType] = field(default_factory=dict)
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    max_quantifier_depth: int = 3


# -- document parsing --------------------------------------------------------

def parse_domain(value: object, location: str) -> Domain:
    if isinstance(value, str):
        if value not in SCALAR_DOMAINS:
            raise SchemaError(location, f"unknown value domain {value!r}")
        return Domain(value)
    if isinstance(value, dict):
        if set(value) == {"enum"}:
            values = value["enum"]
            if (
                not isinstance(values, list)
                or not values
                or not all(isinstance(v, str) for v in values)
            ):
                raise SchemaError(location, "enum domain needs a non-empty list of strings")
            if len(set(values)) != len(values):
                raise SchemaError(location, "enum values must be distinct")
            return Domain("enum", values=tuple(values))
        if set(value) == {"ref"}:
            target = value["ref"]
            if not isinstance(target, str):
                raise SchemaError(location, "ref domain needs an entity type name")
            return Domain("ref", target=target)
    raise SchemaError(location, f"cannot read a value domain from {value!r}")


def _parse_expr(text: object, location: str) -> Expr:
    if not isinstance(text, str):
        raise SchemaError(location, "expected expression text")
    try:
        return predicate.parse_expr(text)
    except ParseError as exc:
        raise SchemaError(location, f"syntax error: {exc}") from exc


def _typecheck(expr: Expr, schema: Schema, env: dict[str, Type], location: str) -> Type:
    try:
        return predicate.typecheck(expr, schema, env)
    except TypeCheckError as exc:
        raise SchemaError(location, str(exc)) from exc


def check_assignable(expr: Expr, ty: Type, domain: Domain, location: str) -> None:
    """Reject statically when an expression's type cannot inhabit a domain.

    Integer expressions widen into real domains.  A string literal fits
    an enum only if it names one of its values; general strings do not.
    """
    kind = domain.kind
    if kind == "integer" and ty.kind == "int":
        return
    if kind == "real" and ty.kind in ("int", "real"):
        return
    if kind == "boolean" and ty.kind == "bool":
        return
    if kind == "string" and ty.kind == "str":
        return
    if kind == "enum":
        if ty.kind == "enum" and (ty.enum_values or frozenset()) <= set(domain.values):
            return
        if isinstance(expr, Const) and isinstance(expr.value, str) and expr.value in domain.values:
            return
    if kind == "ref" and ty.kind == "entity" and ty.entity_type == domain.target:
        return
    raise SchemaError(location, f"expression of type {ty} does not fit domain {domain.render()}")


def conform_value(value: object, domain: Domain) -> object:
    """Coerce a runtime value into a domain, or raise ValueError with the reason.

    Reference liveness is the state layer's concern; here a ref value
    only has to be an id string.
    """
    kind = domain.kind
    if kind == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if kind == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a real, got {value!r}")
        out = float(value)
        if not math.isfinite(out):
            raise ValueError(f"real value must be finite, got {out!r}")
        return out
    if kind == "boolean":
        if not isinstance(value, bool):
            raise ValueError(f"expected a boolean, got {value!r}")
        return value
    if kind == "string":
        if not isinstance(value, str):
            raise ValueError(f"expected a string, got {value!r}")
        return value
    if kind == "enum":
        if value not in domain.values:
            raise ValueError(f"{value!r} is not one of enum({'|'.join(domain.values)})")
        return value
    if not isinstance(value, str):
        raise ValueError(f"expected an entity id, got {value!r}")
    return value


_IDENT_KEYWORDS = frozenset({"and", "or", "not", "exists", "forall", "true", "false"})


def _check_name(name: object, location: str) -> str:
    if not isinstance(name, str) or not name or not name.replace("_", "a").isalnum():
        raise SchemaError(location, f"{name!r} is not a usable name")
    if not (name[0].isalpha() or name[0] == "_"):
        raise SchemaError(location, f"{name!r} must start with a letter")
    if name in _IDENT_KEYWORDS:
        raise SchemaError(location, f"{name!r} is a reserved word")
    return name


def define_schema(doc: dict, *, max_quantifier_depth: int | None = None) -> Schema:
    """Validate a schema document and return the Schema.

    Checks, in order: entity types and their attribute domains, relation
    role targets, constraint expressions (closed booleans), and each
    action's parameters, guard, and effect list.  Every diagnostic names
    the declaration it comes from.
    """
    if not isinstance(doc, dict):
        raise SchemaError("schema", "schema section must be an object")
    known = {"name", "maxQuantifierDepth", "entityTypes", "relationTypes", "actions", "constraints"}
    for key in doc:
        if key not in known:
            raise SchemaError(f"schema.{key}", "unknown schema section")

    depth = doc.get("maxQuantifierDepth", 3)
    if max_quantifier_depth is not None:
        depth = max_quantifier_depth
    if not isinstance(depth, int) or depth < 1:
        raise SchemaError("schema.maxQuantifierDepth", "must be a positive integer")

    schema = Schema(name=str(doc.get("name", "world")), max_quantifier_depth=depth)

    for section in ("entityTypes", "relationTypes", "actions"):
        if not isinstance(doc.get(section) or {}, dict):
            raise SchemaError(f"schema.{section}", "section must be an object")

    for type_name, attrs in (doc.get("entityTypes") or {}).items():
        loc = f"schema.entityTypes.{type_name}"
        _check_name(type_name, loc)
        if not isinstance(attrs, dict):
            raise SchemaError(loc, "attribute declarations must be an object")
        declared: dict[str, Domain] = {}
        for attr_name, domain_doc in attrs.items():
            _check_name(attr_name, f"{loc}.{attr_name}")
            declared[attr_name] = parse_domain(domain_doc, f"{loc}.{attr_name}")
        schema.entity_types[type_name] = declared

    for type_name, attrs in schema.entity_types.items():
        for attr_name, domain in attrs.items():
            if domain.kind == "ref" and domain.target not in schema.entity_types:
                raise SchemaError(
                    f"schema.entityTypes.{type_name}.{attr_name}",
                    f"ref target {domain.target!r} is not a declared entity type",
                )

    for rel_name, roles_doc in (doc.get("relationTypes") or {}).items():
        loc = f"schema.relationTypes.{rel_name}"
        _check_name(rel_name, loc)
        if rel_name in schema.entity_types:
            raise SchemaError(loc, "relation type name collides with an entity type")
        if not isinstance(roles_doc, list) or not roles_doc:
            raise SchemaError(loc, "relation needs a non-empty ordered role list")
        roles: list[tuple[str, str]] = []
        seen_roles: set[str] = set()
        for i, role_doc in enumerate(roles_doc):
            rloc = f"{loc}[{i}]"
            if not isinstance(role_doc, dict) or set(role_doc) != {"name", "type"}:
                raise SchemaError(rloc, 'each role must be {"name": ..., "type": ...}')
            role_name = _check_name(role_doc["name"], rloc)
            if role_name in seen_roles:
                raise SchemaError(rloc, f"duplicate role name {role_name!r}")
            seen_roles.add(role_name)
            if not isinstance(role_doc["type"], str) or role_doc["type"] not in schema.entity_types:
                raise SchemaError(rloc, f"role target {role_doc['type']!r} is not a declared entity type")
            roles.append((role_name, role_doc["type"]))
        schema.relation_types[rel_name] = RelationType(rel_name, tuple(roles))

    constraints_doc = doc.get("constraints") or []
    if not isinstance(constraints_doc, list):
        raise SchemaError("schema.constraints", "constraints must be a list")
    seen_constraints: set[str] = set()
    for i, c_doc in enumerate(constraints_doc):
        loc = f"schema.constraints[{i}]"
        if not isinstance(c_doc, dict) or set(c_doc) != {"name", "expr"}:
            raise SchemaError(loc, 'each constraint must be {"name": ..., "expr": ...}')
        c_name = c_doc["name"]
        if not isinstance(c_name, str) or not c_name:
            raise SchemaError(loc, "constraint needs a non-empty name")
        if c_name in seen_constraints:
            raise SchemaError(loc, f"duplicate constraint name {c_name!r}")
        seen_constraints.add(c_name)
        expr = _parse_expr(c_doc["expr"], f"{loc} ({c_name})")
        ty = _typecheck(expr, schema, {}, f"{loc} ({c_name})")
        if ty.kind != "bool":
            raise SchemaError(f"{loc} ({c_name})", f"constraint must be boolean, got {ty}")
        schema.constraints.append(Constraint(c_name, expr, c_doc["expr"]))

    for action_name, a_doc in (doc.get("actions") or {}).items():
        schema.actions[action_name] = _parse_action(action_name, a_doc, schema)

    return schema


def _parse_action(action_name: str, a_doc: object, schema: Schema) -> ActionDecl:
    loc = f"schema.actions.{action_name}"
    _check_name(action_name, loc)
    if action_name in schema.relation_types or action_name in schema.entity_types:
        raise SchemaError(loc, "action name collides with a type name")
    if not isinstance(a_doc, dict):
        raise SchemaError(loc, "action declaration must be an object")
    for key in a_doc:
        if key not in ("params", "guard", "effects"):
            raise SchemaError(f"{loc}.{key}", "unknown action field")

    if not isinstance(a_doc.get("params") or [], list):
        raise SchemaError(f"{loc}.params", "params must be a list")
    if not isinstance(a_doc.get("effects") or [], list):
        raise SchemaError(f"{loc}.effects", "effects must be a list")

    params: list[Param] = []
    seen: set[str] = set()
    for i, p_doc in enumerate(a_doc.get("params") or []):
        ploc = f"{loc}.params[{i}]"
        if not isinstance(p_doc, dict) or set(p_doc) != {"name", "type"}:
            raise SchemaError(ploc, 'each param must be {"name": ..., "type": ...}')
        p_name = _check_name(p_doc["name"], ploc)
        if p_name in seen:
            raise SchemaError(ploc, f"duplicate parameter {p_name!r}")
        seen.add(p_name)
        params.append(Param(p_name, parse_domain(p_doc["type"], ploc)))
    for p in params:
        if p.domain.kind == "ref" and p.domain.target not in schema.entity_types:
            raise SchemaError(f"{loc}.params", f"ref target {p.domain.target!r} is not declared")

    env = {p.name: p.domain.value_type() for p in params}

    guard_text = a_doc.get("guard", "true")
    guard = _parse_expr(guard_text, f"{loc}.guard")
    guard_ty = _typecheck(guard, schema, env, f"{loc}.guard")
    if guard_ty.kind != "bool":
        raise SchemaError(f"{loc}.guard", f"guard must be boolean, got {guard_ty}")

    effects: list[Effect] = []
    effect_env = dict(env)
    for i, e_doc in enumerate(a_doc.get("effects") or []):
        effects.append(_parse_effect(e_doc, schema, effect_env, f"{loc}.effects[{i}]"))

    return ActionDecl(action_name, tuple(params), guard, guard_text, tuple(effects))


def _entity_expr(doc: dict, key: str, schema: Schema, env: dict[str, Type], location: str) -> tuple[Expr, Type]:
    expr = _parse_expr(doc.get(key), f"{location}.{key}")
    ty = _typecheck(expr, schema, env, f"{location}.{key}")
    if ty.kind != "entity":
        raise SchemaError(f"{location}.{key}", f"expected an entity-valued expression, got {ty}")
    return expr, ty


def _parse_effect(e_doc: object, schema: Schema, env: dict[str, Type], location: str) -> Effect:
    if not isinstance(e_doc, dict) or "op" not in e_doc:
        raise SchemaError(location, 'each effect must be an object with an "op" key')
    op = e_doc["op"]

    if op == "createEntity":
        type_name = e_doc.get("type")
        attrs_decl = schema.entity_types.get(type_name) if isinstance(type_name, str) else None
        if attrs_decl is None:
            raise SchemaError(location, f"createEntity of undeclared type {type_name!r}")
        attrs_doc = e_doc.get("attrs") or {}
        if not isinstance(attrs_doc, dict):
            raise SchemaError(location, "createEntity attrs must be an object")
        if set(attrs_doc) != set(attrs_decl):
            missing = sorted(set(attrs_decl) - set(attrs_doc))
            extra = sorted(set(attrs_doc) - set(attrs_decl))
            raise SchemaError(
                location,
                f"createEntity attrs must cover the type exactly (missing {missing}, extra {extra})",
            )
        attr_exprs: dict[str, Expr] = {}
        for attr_name, text in attrs_doc.items():
            aloc = f"{location}.attrs.{attr_name}"
            expr = _parse_expr(text, aloc)
            ty = _typecheck(expr, schema, env, aloc)
            check_assignable(expr, ty, attrs_decl[attr_name], aloc)
            attr_exprs[attr_name] = expr
        binder = e_doc.get("as")
        if binder is not None:
            _check_name(binder, f"{location}.as")
            if binder in env:
                raise SchemaError(f"{location}.as", f"binder {binder!r} shadows an existing name")
            env[binder] = Type("entity", entity_type=type_name)
        return CreateEffect(type_name, attr_exprs, binder)

    if op == "deleteEntity":
        expr, _ = _entity_expr(e_doc, "entity", schema, env, location)
        return DeleteEffect(expr)

    if op == "setAttribute":
        expr, ty = _entity_expr(e_doc, "entity", schema, env, location)
        attr = e_doc.get("attr")
        attrs_decl = schema.entity_types[ty.entity_type or ""]
        if not isinstance(attr, str) or attr not in attrs_decl:
            raise SchemaError(location, f"type {ty.entity_type!r} has no attribute {attr!r}")
        vloc = f"{location}.value"
        value = _parse_expr(e_doc.get("value"), vloc)
        vty = _typecheck(value, schema, env, vloc)
        check_assignable(value, vty, attrs_decl[attr], vloc)
        return SetEffect(expr, attr, value)

    if op in ("addRelationTuple", "removeRelationTuple"):
        rel_name = e_doc.get("relation")
        rel = schema.relation_types.get(rel_name) if isinstance(rel_name, str) else None
        if rel is None:
            raise SchemaError(location, f"undeclared relation {e_doc.get('relation')!r}")
        args_doc = e_doc.get("entities")
        if not isinstance(args_doc, list) or len(args_doc) != len(rel.roles):
            raise SchemaError(location, f"relation {rel.name!r} takes {len(rel.roles)} entities")
        args: list[Expr] = []
        for i, ((role_name, type_name), text) in enumerate(zip(rel.roles, args_doc)):
            aloc = f"{location}.entities[{i}]"
            expr = _parse_expr(text, aloc)
            ty = _typecheck(expr, schema, env, aloc)
            if ty.kind != "entity" or ty.entity_type != type_name:
                raise SchemaError(aloc, f"role {role_name!r} requires {type_name}, got {ty}")
            args.append(expr)
        cls = AddRelationEffect if op == "addRelationTuple" else RemoveRelationEffect
        return cls(rel.name, tuple(args))

    raise SchemaError(location, f"unknown effect op {op!r}")
