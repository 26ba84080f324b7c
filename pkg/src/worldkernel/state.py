"""Versioned factual state and atomic, constraint-checked transitions.

A WorldState is a value: applying an action never mutates its input, it
builds a candidate copy, applies the action's effects in order (each
effect sees the results of the previous ones), validates the result
structurally and against every named constraint, and only then commits.
On any failure the caller keeps the exact object it passed in.

Each committed transition yields a Transaction carrying the delta as a
list of primitive edits; replaying deltas in sequence onto the initial
state reproduces the final state bit for bit, which is what the event
log relies on.

State hashing uses a canonical serialization: JSON with sorted keys and
no whitespace, entities keyed by id, relation tuples sorted
lexicographically, integers unquoted, reals in shortest round-trip
form.  Insertion order can never leak into the digest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import predicate
from .errors import (
    ArgTypeError,
    ConstraintViolation,
    CorruptLog,
    GuardViolation,
    SchemaError,
    StateTypeError,
    UnknownAction,
)
from .schema import (
    AddRelationEffect,
    CreateEffect,
    DeleteEffect,
    RemoveRelationEffect,
    Schema,
    SetEffect,
    conform_value,
)


@dataclass
class EntityInst:
    type_name: str
    attrs: dict[str, object]


@dataclass
class WorldState:
    """One point of the state space.  Treat as immutable once observed."""

    version: int = 0
    next_id: int = 1
    entities: dict[str, EntityInst] = field(default_factory=dict)
    relations: set[tuple] = field(default_factory=set)

    def copy(self) -> "WorldState":
        return WorldState(
            version=self.version,
            next_id=self.next_id,
            entities={eid: EntityInst(e.type_name, dict(e.attrs)) for eid, e in self.entities.items()},
            relations=set(self.relations),
        )


@dataclass(frozen=True)
class Transaction:
    """A committed action application; the unit of the event log and of learning."""

    seq: int
    action: str
    args: dict[str, object]
    delta: tuple[dict, ...]
    timestamp: int  # logical time, equals seq

    def log_entry(self, case_features: list[str]) -> dict:
        return {
            "seq": self.seq,
            "action": self.action,
            "args": self.args,
            "delta": list(self.delta),
            "caseFeatures": case_features,
        }


# -- canonical serialization and hashing --------------------------------------

def canonical_json(value: object) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_state_dict(state: WorldState) -> dict:
    return {
        "version": state.version,
        "nextId": state.next_id,
        "entities": {
            eid: {"type": inst.type_name, "attrs": inst.attrs}
            for eid, inst in state.entities.items()
        },
        "relations": sorted(list(t) for t in state.relations),
    }


def state_hash(state: WorldState) -> str:
    """Hex digest of the canonical serialization."""
    payload = canonical_json(canonical_state_dict(state)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


# -- structural and constraint validation -------------------------------------

def validate_structure(state: WorldState, schema: Schema) -> None:
    """Every attribute in its domain, every reference live and well-typed."""
    for eid, inst in state.entities.items():
        decl = schema.entity_types.get(inst.type_name)
        if decl is None:
            raise StateTypeError(eid, None, f"undeclared entity type {inst.type_name!r}")
        if set(inst.attrs) != set(decl):
            raise StateTypeError(eid, None, "attribute set does not match the declared type")
        for attr, domain in decl.items():
            value = inst.attrs[attr]
            try:
                inst.attrs[attr] = conform_value(value, domain)
            except ValueError as exc:
                raise StateTypeError(eid, attr, str(exc)) from None
            if domain.kind == "ref":
                target = state.entities.get(value)  # type: ignore[arg-type]
                if target is None:
                    raise StateTypeError(eid, attr, f"dangling reference {value!r}")
                if target.type_name != domain.target:
                    raise StateTypeError(
                        eid, attr, f"reference {value!r} is a {target.type_name}, not {domain.target}"
                    )
    for tup in state.relations:
        rel = schema.relation_types.get(tup[0])
        if rel is None or len(tup) != len(rel.roles) + 1:
            raise StateTypeError(str(tup), None, "tuple does not match a declared relation")
        for eid, (role_name, type_name) in zip(tup[1:], rel.roles):
            inst = state.entities.get(eid)
            if inst is None:
                raise StateTypeError(eid, None, f"relation {tup[0]!r} references a missing entity")
            if inst.type_name != type_name:
                raise StateTypeError(eid, None, f"role {role_name!r} of {tup[0]!r} requires {type_name}")


def check_constraints(state: WorldState, schema: Schema) -> None:
    for constraint in schema.constraints:
        if not predicate.eval_predicate(state, constraint.expr):
            raise ConstraintViolation(constraint.name)


# -- primitive edits -----------------------------------------------------------

def _fresh_id(state: WorldState) -> str:
    eid = f"e{state.next_id}"
    state.next_id += 1
    return eid


def apply_edit(state: WorldState, edit: dict) -> None:
    """Apply one primitive edit in place; raises StateTypeError when it cannot apply.

    Used both by the effect interpreter and by log replay, so a recorded
    delta always re-applies onto the same pre-state.
    """
    op = edit["op"]
    if op == "createEntity":
        eid = edit["id"]
        if eid in state.entities:
            raise StateTypeError(eid, None, "createEntity id already exists")
        state.entities[eid] = EntityInst(edit["type"], dict(edit["attrs"]))
        if eid.startswith("e") and eid[1:].isdigit():
            state.next_id = max(state.next_id, int(eid[1:]) + 1)
        return
    if op == "deleteEntity":
        eid = edit["id"]
        if eid not in state.entities:
            raise StateTypeError(eid, None, "deleteEntity of a missing entity")
        for tup in state.relations:
            if eid in tup[1:]:
                raise StateTypeError(eid, None, "deleteEntity with relation tuples still attached")
        del state.entities[eid]
        return
    if op == "setAttribute":
        inst = state.entities.get(edit["id"])
        if inst is None or edit["attr"] not in inst.attrs:
            raise StateTypeError(edit["id"], edit.get("attr"), "setAttribute target does not exist")
        inst.attrs[edit["attr"]] = edit["value"]
        return
    if op == "addRelationTuple":
        tup = (edit["relation"], *edit["entities"])
        if tup in state.relations:
            raise StateTypeError(str(tup), None, "addRelationTuple of a tuple already present")
        state.relations.add(tup)
        return
    if op == "removeRelationTuple":
        tup = (edit["relation"], *edit["entities"])
        if tup not in state.relations:
            raise StateTypeError(str(tup), None, "removeRelationTuple of an absent tuple")
        state.relations.remove(tup)
        return
    raise StateTypeError("?", None, f"unknown edit op {op!r}")


# -- init ----------------------------------------------------------------------

def init_state(schema: Schema, init_doc: dict | None) -> WorldState:
    """Build the version-0 state from an instance document.

    Entities are listed in order and receive engine ids e1, e2, ...; an
    optional per-entity "key" names the instance within the document so
    relations and ref attributes can point at it.
    """
    doc = init_doc or {}
    if not isinstance(doc, dict) or not set(doc) <= {"entities", "relations"}:
        raise SchemaError("init", 'init section allows only "entities" and "relations"')
    if not isinstance(doc.get("entities") or [], list):
        raise SchemaError("init.entities", "must be a list of entity documents")
    if not isinstance(doc.get("relations") or [], list):
        raise SchemaError("init.relations", "must be a list of relation tuples")
    state = WorldState()
    keys: dict[str, str] = {}
    pending_refs: list[tuple[str, str, str]] = []  # (eid, attr, key)

    for i, e_doc in enumerate(doc.get("entities") or []):
        loc = f"init.entities[{i}]"
        if not isinstance(e_doc, dict) or not {"type"} <= set(e_doc) <= {"type", "key", "attrs"}:
            raise SchemaError(loc, 'each entity must be {"type": ..., "attrs": ..., "key"?: ...}')
        type_name = e_doc["type"]
        decl = schema.entity_types.get(type_name) if isinstance(type_name, str) else None
        if decl is None:
            raise SchemaError(loc, f"undeclared entity type {type_name!r}")
        eid = _fresh_id(state)
        key = e_doc.get("key")
        if key is not None:
            if not isinstance(key, str):
                raise SchemaError(loc, "entity key must be a string")
            if key in keys:
                raise SchemaError(loc, f"duplicate entity key {key!r}")
            keys[key] = eid
        attrs_doc = e_doc.get("attrs") or {}
        if not isinstance(attrs_doc, dict):
            raise SchemaError(loc, "attrs must be an object")
        if set(attrs_doc) != set(decl):
            raise StateTypeError(key or eid, None, "attrs must cover the declared attribute set exactly")
        attrs: dict[str, object] = {}
        for attr, domain in decl.items():
            value = attrs_doc[attr]
            if domain.kind == "ref":
                if not isinstance(value, str):
                    raise StateTypeError(key or eid, attr, f"expected an entity key, got {value!r}")
                pending_refs.append((eid, attr, value))
                attrs[attr] = value  # patched below once all keys are known
                continue
            try:
                attrs[attr] = conform_value(value, domain)
            except ValueError as exc:
                raise StateTypeError(key or eid, attr, str(exc)) from None
        state.entities[eid] = EntityInst(type_name, attrs)

    for eid, attr, key in pending_refs:
        if key not in keys:
            raise StateTypeError(eid, attr, f"reference to unknown entity key {key!r}")
        state.entities[eid].attrs[attr] = keys[key]

    for i, r_doc in enumerate(doc.get("relations") or []):
        loc = f"init.relations[{i}]"
        if not isinstance(r_doc, dict) or set(r_doc) != {"relation", "entities"}:
            raise SchemaError(loc, 'each relation tuple must be {"relation": ..., "entities": [...]}')
        rel = (schema.relation_types.get(r_doc["relation"])
               if isinstance(r_doc["relation"], str) else None)
        if rel is None:
            raise SchemaError(loc, f"undeclared relation {r_doc['relation']!r}")
        members = r_doc["entities"]
        if not isinstance(members, list) or len(members) != len(rel.roles):
            raise SchemaError(loc, f"relation {rel.name!r} takes {len(rel.roles)} entities")
        ids = []
        for key in members:
            if not isinstance(key, str) or key not in keys:
                raise StateTypeError(str(key), None, f"relation tuple references unknown entity key {key!r}")
            ids.append(keys[key])
        state.relations.add((rel.name, *ids))

    validate_structure(state, schema)
    check_constraints(state, schema)
    return state


# -- action application ----------------------------------------------------------

def bind_args(schema: Schema, action_name: str, args: dict, state: WorldState) -> dict[str, object]:
    """Typecheck call arguments against the declared parameter list."""
    decl = schema.actions.get(action_name)
    if decl is None:
        raise UnknownAction(action_name)
    declared = {p.name for p in decl.params}
    if set(args) != declared:
        missing = sorted(declared - set(args))
        extra = sorted(set(args) - declared)
        raise ArgTypeError(action_name, ",".join(missing + extra) or "?",
                           f"arguments must be exactly {sorted(declared)}")
    bound: dict[str, object] = {}
    for p in decl.params:
        try:
            value = conform_value(args[p.name], p.domain)
        except ValueError as exc:
            raise ArgTypeError(action_name, p.name, str(exc)) from None
        if p.domain.kind == "ref":
            inst = state.entities.get(value)  # type: ignore[arg-type]
            if inst is None:
                raise ArgTypeError(action_name, p.name, f"no entity {value!r}")
            if inst.type_name != p.domain.target:
                raise ArgTypeError(
                    action_name, p.name, f"{value!r} is a {inst.type_name}, not {p.domain.target}"
                )
        bound[p.name] = value
    return bound


def apply_action(
    state: WorldState, schema: Schema, action_name: str, args: dict
) -> tuple[WorldState, Transaction]:
    """Atomically apply one declared action.

    Order: argument binding, guard on the pre-state, effects in
    declaration order on a candidate copy, structural validation, then
    every constraint.  Any failure raises and the input state is
    returned to the caller untouched.
    """
    decl = schema.actions.get(action_name)
    if decl is None:
        raise UnknownAction(action_name)
    bound = bind_args(schema, action_name, args, state)

    if not predicate.eval_predicate(state, decl.guard, dict(bound)):
        raise GuardViolation(action_name)

    candidate = state.copy()
    env: dict[str, object] = dict(bound)
    delta: list[dict] = []

    for effect in decl.effects:
        if isinstance(effect, CreateEffect):
            attrs = {
                name: _conform_effect_value(
                    predicate.eval_term(expr, candidate, env),
                    schema.entity_types[effect.type_name][name],
                    effect.type_name,
                    name,
                )
                for name, expr in effect.attrs.items()
            }
            edit = {"op": "createEntity", "id": f"e{candidate.next_id}", "type": effect.type_name, "attrs": attrs}
            apply_edit(candidate, edit)
            delta.append(edit)
            if effect.binder:
                env[effect.binder] = edit["id"]
        elif isinstance(effect, DeleteEffect):
            eid = predicate.eval_term(effect.entity, candidate, env)
            # Detach the entity's relation tuples first so the recorded
            # delta replays cleanly; ref attributes pointing here are
            # caught by structural validation below.
            for tup in sorted(t for t in candidate.relations if eid in t[1:]):
                edit = {"op": "removeRelationTuple", "relation": tup[0], "entities": list(tup[1:])}
                apply_edit(candidate, edit)
                delta.append(edit)
            edit = {"op": "deleteEntity", "id": eid}
            apply_edit(candidate, edit)
            delta.append(edit)
        elif isinstance(effect, SetEffect):
            eid = predicate.eval_term(effect.entity, candidate, env)
            inst = candidate.entities.get(eid)  # type: ignore[arg-type]
            if inst is None:
                raise StateTypeError(str(eid), effect.attr, "setAttribute on a missing entity")
            value = _conform_effect_value(
                predicate.eval_term(effect.value, candidate, env),
                schema.entity_types[inst.type_name][effect.attr],
                inst.type_name,
                effect.attr,
            )
            edit = {"op": "setAttribute", "id": eid, "attr": effect.attr, "value": value}
            apply_edit(candidate, edit)
            delta.append(edit)
        elif isinstance(effect, AddRelationEffect):
            ids = [predicate.eval_term(a, candidate, env) for a in effect.args]
            if (effect.relation, *ids) not in candidate.relations:
                edit = {"op": "addRelationTuple", "relation": effect.relation, "entities": ids}
                apply_edit(candidate, edit)
                delta.append(edit)
        elif isinstance(effect, RemoveRelationEffect):
            ids = [predicate.eval_term(a, candidate, env) for a in effect.args]
            if (effect.relation, *ids) in candidate.relations:
                edit = {"op": "removeRelationTuple", "relation": effect.relation, "entities": ids}
                apply_edit(candidate, edit)
                delta.append(edit)

    validate_structure(candidate, schema)
    check_constraints(candidate, schema)

    candidate.version = state.version + 1
    txn = Transaction(
        seq=candidate.version,
        action=action_name,
        args=bound,
        delta=tuple(delta),
        timestamp=candidate.version,
    )
    return candidate, txn


def _conform_effect_value(value: object, domain, type_name: str, attr: str) -> object:
    try:
        return conform_value(value, domain)
    except ValueError as exc:
        raise StateTypeError(f"<{type_name}>", attr, str(exc)) from None


# -- replay ----------------------------------------------------------------------

def replay(schema: Schema, init_doc: dict | None, log: list) -> WorldState:
    """Rebuild the final state from the initial document and an ordered delta log.

    Guards and constraints are not re-evaluated; the log is trusted to
    be the record of an already-validated run.  Sequence gaps and edits
    that no longer apply raise CorruptLog.
    """
    state = init_state(schema, init_doc)
    expected = 1
    for entry in log:
        seq = entry["seq"] if isinstance(entry, dict) else entry.seq
        delta = entry["delta"] if isinstance(entry, dict) else entry.delta
        if seq != expected:
            raise CorruptLog(seq, f"expected seq {expected}")
        for edit in delta:
            try:
                apply_edit(state, edit)
            except StateTypeError as exc:
                raise CorruptLog(seq, str(exc)) from None
        state.version = expected
        expected += 1
    return state
