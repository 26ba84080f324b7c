"""Scenario documents: loading, cross-validation, and kernel construction.

A scenario is one UTF-8 JSON file with the sections "schema", "init",
"terminology", "roles", "agents", "learner", and "run".  Parsing
validates everything up front so a scenario that loads cleanly can be
run, served, and replayed without further checks: the schema section is
fully typechecked, the init document must produce a constraint-
satisfying state, roles may only expose declared vocabulary, and every
agent policy row is checked against its role (authorized tool, visible
vocabulary only, argument expressions fitting the declared parameters).

A policy row is ``{"let"?: {...}, "when": ..., "do": ..., "args": {...}}``.
The optional ``let`` object declares entity-typed variables; at runtime
candidates are tried in ascending entity-id order (rightmost variable
fastest) and the first combination satisfying ``when`` is the binding
the argument expressions see.  Argument values may be JSON numbers or
booleans (taken literally) or strings (parsed as expressions, so string
literals need inner quotes: ``"'done'"``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import predicate
from .agents import AgentSpec, PolicyRule, Role
from .causal import Terminology, build_terminology
from .errors import ScenarioError, SchemaError
from .kernel import WorldKernel
from .learning import DEFAULT_CONFIG, LearnerConfig, config_from_doc
from .predicate import Const, Expr, ParseError, Type, TypeCheckError, UsedVocabulary
from .schema import Schema, check_assignable, define_schema
from .state import init_state

TOP_LEVEL_KEYS = {"schema", "init", "terminology", "roles", "agents", "learner", "run"}


@dataclass
class Scenario:
    """A fully validated scenario, ready to build kernels from."""

    name: str
    schema: Schema
    init_doc: dict
    terminology: Terminology
    roles: dict[str, Role]
    agents: dict[str, AgentSpec] = field(default_factory=dict)
    learner_config: LearnerConfig = DEFAULT_CONFIG
    run_steps: int | None = None
    run_seed: int = 0


def build_kernel(scenario: Scenario) -> WorldKernel:
    """Fresh kernel at version 0 with the scenario's roles and agents registered."""
    kernel = WorldKernel(
        scenario.schema,
        init_state(scenario.schema, scenario.init_doc),
        scenario.terminology,
        scenario.learner_config,
    )
    for role in scenario.roles.values():
        kernel.add_role(role)
    for spec in scenario.agents.values():
        kernel.add_agent(spec)
    return kernel


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file; JSON errors carry line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", f"JSON parse error: {exc.msg}") from exc
    return parse_scenario(doc)


def demo_scenario_path() -> Path:
    """Filesystem path of the bundled mini-clinic demo scenario."""
    with resources.as_file(resources.files("worldkernel").joinpath("data/mini_clinic.json")) as p:
        return Path(p)


def parse_scenario(doc: object) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario", "top level must be a JSON object")
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError("scenario", f"unknown top-level keys: {sorted(unknown)}")
    if "schema" not in doc:
        raise ScenarioError("scenario", 'missing the "schema" section')

    schema = define_schema(doc["schema"])
    init_doc = doc.get("init") or {}
    init_state(schema, init_doc)  # reject invalid initial worlds at load time
    terminology = build_terminology(doc.get("terminology"), schema)
    learner_config = config_from_doc(doc.get("learner"))

    if not isinstance(doc.get("roles") or [], list):
        raise ScenarioError("roles", "roles section must be a list")
    if not isinstance(doc.get("agents") or [], list):
        raise ScenarioError("agents", "agents section must be a list")

    roles: dict[str, Role] = {}
    for i, r_doc in enumerate(doc.get("roles") or []):
        role = _parse_role(r_doc, schema, terminology, f"roles[{i}]")
        if role.name in roles:
            raise ScenarioError(f"roles[{i}]", f"duplicate role name {role.name!r}")
        roles[role.name] = role

    agents: dict[str, AgentSpec] = {}
    for i, a_doc in enumerate(doc.get("agents") or []):
        spec = _parse_agent(a_doc, schema, terminology, roles, f"agents[{i}]")
        if spec.agent_id in agents:
            raise ScenarioError(f"agents[{i}]", f"duplicate agent id {spec.agent_id!r}")
        agents[spec.agent_id] = spec

    run_doc = doc.get("run") or {}
    if not isinstance(run_doc, dict) or not set(run_doc) <= {"steps", "seed"}:
        raise ScenarioError("run", 'run section allows only "steps" and "seed"')
    steps = run_doc.get("steps")
    if steps is not None and (not isinstance(steps, int) or steps < 0):
        raise ScenarioError("run.steps", "steps must be a non-negative integer")
    seed = run_doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("run.seed", "seed must be an integer")

    return Scenario(
        name=schema.name,
        schema=schema,
        init_doc=init_doc,
        terminology=terminology,
        roles=roles,
        agents=agents,
        learner_config=learner_config,
        run_steps=steps,
        run_seed=seed,
    )


# -- roles ---------------------------------------------------------------------

def _names_or_all(value: object, universe: list[str], loc: str) -> frozenset[str]:
    if value == "all":
        return frozenset(universe)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ScenarioError(loc, 'expected a list of names or "all"')
    for name in value:
        if name not in universe:
            raise ScenarioError(loc, f"{name!r} is not declared")
    return frozenset(value)


def _parse_role(r_doc: object, schema: Schema, terminology: Terminology, loc: str) -> Role:
    keys = {
        "name", "visibleEntityTypes", "visibleAttributes",
        "visibleRelationTypes", "visibleFeatures", "tools",
    }
    if not isinstance(r_doc, dict) or not set(r_doc) <= keys or "name" not in r_doc:
        raise ScenarioError(loc, f"role must be an object with keys from {sorted(keys)}")
    name = r_doc["name"]
    if not isinstance(name, str) or not name:
        raise ScenarioError(loc, "role needs a non-empty name")

    types = _names_or_all(
        r_doc.get("visibleEntityTypes", []), list(schema.entity_types), f"{loc}.visibleEntityTypes"
    )

    attrs_doc = r_doc.get("visibleAttributes", [])
    attributes: set[tuple[str, str]] = set()
    if attrs_doc == "all":
        attributes = {(t, a) for t in types for a in schema.entity_types[t]}
    elif isinstance(attrs_doc, dict):
        for type_name, attr_names in attrs_doc.items():
            aloc = f"{loc}.visibleAttributes.{type_name}"
            if not isinstance(type_name, str) or type_name not in types:
                raise ScenarioError(aloc, f"{type_name!r} is not among the role's visible entity types")
            if attr_names == "all":
                attr_names = list(schema.entity_types[type_name])
            if not isinstance(attr_names, list):
                raise ScenarioError(aloc, 'expected a list of attribute names or "all"')
            for attr in attr_names:
                if not isinstance(attr, str) or attr not in schema.entity_types[type_name]:
                    raise ScenarioError(aloc, f"{type_name}.{attr} is not declared")
                attributes.add((type_name, attr))
    else:
        raise ScenarioError(f"{loc}.visibleAttributes", 'expected an object of type -> attrs, or "all"')

    relations = _names_or_all(
        r_doc.get("visibleRelationTypes", []), list(schema.relation_types), f"{loc}.visibleRelationTypes"
    )

    features_doc = r_doc.get("visibleFeatures", [])
    if features_doc == "all":
        feature_ids = frozenset(range(len(terminology)))
    elif isinstance(features_doc, list):
        all_names = {f.name: f.id for f in terminology.features}
        ids = set()
        for fname in features_doc:
            if not isinstance(fname, str) or fname not in all_names:
                raise ScenarioError(f"{loc}.visibleFeatures", f"{fname!r} is not a terminology feature")
            ids.add(all_names[fname])
        feature_ids = frozenset(ids)
    else:
        raise ScenarioError(f"{loc}.visibleFeatures", 'expected a list of feature names or "all"')

    tools = _names_or_all(r_doc.get("tools", []), list(schema.actions), f"{loc}.tools")

    return Role(
        name=name,
        visible_entity_types=types,
        visible_attributes=frozenset(attributes),
        visible_relation_types=relations,
        visible_features=feature_ids,
        tools=tools,
    )


# -- agents and policies ---------------------------------------------------------

def _check_visibility(used: UsedVocabulary, role: Role, loc: str) -> None:
    for t in sorted(used.entity_types - role.visible_entity_types):
        raise ScenarioError(loc, f"references entity type {t!r} outside role {role.name!r}'s visibility")
    for pair in sorted(used.attributes - role.visible_attributes):
        raise ScenarioError(loc, f"references attribute {pair[0]}.{pair[1]} outside role {role.name!r}'s visibility")
    for r in sorted(used.relations - role.visible_relation_types):
        raise ScenarioError(loc, f"references relation {r!r} outside role {role.name!r}'s visibility")


def _parse_policy_expr(
    text: object, schema: Schema, env: dict[str, Type], role: Role, loc: str
) -> tuple[Expr, Type]:
    if not isinstance(text, str):
        raise ScenarioError(loc, f"expected expression text, got {text!r}")
    try:
        expr = predicate.parse_expr(text)
    except ParseError as exc:
        raise ScenarioError(loc, f"syntax error: {exc}") from exc
    used = UsedVocabulary.empty()
    try:
        ty = predicate.typecheck(expr, schema, env, used=used)
    except TypeCheckError as exc:
        raise ScenarioError(loc, str(exc)) from exc
    _check_visibility(used, role, loc)
    return expr, ty


def _parse_agent(
    a_doc: object,
    schema: Schema,
    terminology: Terminology,
    roles: dict[str, Role],
    loc: str,
) -> AgentSpec:
    if not isinstance(a_doc, dict) or not {"id", "role"} <= set(a_doc) <= {"id", "role", "policy"}:
        raise ScenarioError(loc, 'agent must be {"id": ..., "role": ..., "policy"?: [...]}')
    agent_id = a_doc["id"]
    if not isinstance(agent_id, str) or not agent_id:
        raise ScenarioError(loc, "agent needs a non-empty id")
    role = roles.get(a_doc["role"]) if isinstance(a_doc["role"], str) else None
    if role is None:
        raise ScenarioError(loc, f"agent {agent_id!r} names unknown role {a_doc['role']!r}")

    if not isinstance(a_doc.get("policy") or [], list):
        raise ScenarioError(loc, "policy must be a list of rows")

    policy: list[PolicyRule] = []
    for j, row in enumerate(a_doc.get("policy") or []):
        rloc = f"{loc}.policy[{j}]"
        if not isinstance(row, dict) or not {"when", "do"} <= set(row) <= {"let", "when", "do", "args"}:
            raise ScenarioError(rloc, 'policy row must be {"let"?, "when", "do", "args"?}')

        if not isinstance(row.get("let") or {}, dict):
            raise ScenarioError(f"{rloc}.let", "let must map variables to entity types")

        binders: list[tuple[str, str]] = []
        env: dict[str, Type] = {}
        for var, type_name in (row.get("let") or {}).items():
            bloc = f"{rloc}.let.{var}"
            if not isinstance(type_name, str) or type_name not in schema.entity_types:
                raise ScenarioError(bloc, f"undeclared entity type {type_name!r}")
            if type_name not in role.visible_entity_types:
                raise ScenarioError(bloc, f"entity type {type_name!r} is outside role {role.name!r}'s visibility")
            if var in env:
                raise ScenarioError(bloc, f"duplicate binder {var!r}")
            env[var] = Type("entity", entity_type=type_name)
            binders.append((var, type_name))

        when_text = row["when"]
        when, when_ty = _parse_policy_expr(when_text, schema, env, role, f"{rloc}.when")
        if when_ty.kind != "bool":
            raise ScenarioError(f"{rloc}.when", f"condition must be boolean, got {when_ty}")

        tool = row["do"]
        decl = schema.actions.get(tool) if isinstance(tool, str) else None
        if decl is None:
            raise ScenarioError(f"{rloc}.do", f"undeclared action {tool!r}")
        if tool not in role.tools:
            raise ScenarioError(
                f"{rloc}.do", f"agent {agent_id!r} uses tool {tool!r} not authorized for role {role.name!r}"
            )

        args_doc = row.get("args") or {}
        if not isinstance(args_doc, dict):
            raise ScenarioError(f"{rloc}.args", "args must be an object")
        declared = {p.name: p.domain for p in decl.params}
        if set(args_doc) != set(declared):
            raise ScenarioError(
                f"{rloc}.args", f"arguments must be exactly {sorted(declared)}, got {sorted(args_doc)}"
            )
        arg_exprs: dict[str, Expr] = {}
        arg_texts: dict[str, str] = {}
        for pname, raw in args_doc.items():
            aloc = f"{rloc}.args.{pname}"
            if isinstance(raw, str):
                expr, ty = _parse_policy_expr(raw, schema, env, role, aloc)
                arg_texts[pname] = raw
            elif isinstance(raw, (bool, int, float)):
                expr = Const(raw)
                ty = predicate.typecheck(expr, schema, {})
                arg_texts[pname] = json.dumps(raw)
            else:
                raise ScenarioError(aloc, f"argument must be expression text or a literal, got {raw!r}")
            try:
                check_assignable(expr, ty, declared[pname], aloc)
            except SchemaError as exc:
                raise ScenarioError(aloc, f"does not fit parameter {pname!r}: {exc.reason}") from None
            arg_exprs[pname] = expr

        policy.append(PolicyRule(tuple(binders), when, when_text, tool, arg_exprs, arg_texts))

    return AgentSpec(agent_id=agent_id, role_name=role.name, policy=tuple(policy))
