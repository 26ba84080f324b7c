"""Role-scoped agent mediation: perceive, query knowledge, act.

An agent's view of the world is a projection of the shared state by its
role's visibility sets.  Projection drops entities of invisible types,
hides invisible attributes inside visible entities, and keeps a relation
tuple only when its relation type and all member entity types are
visible, so no tuple ever names an entity the role could not see by
type.

Acting checks authorization before anything else: an unauthorized
caller is rejected without the guard being evaluated, so it cannot
probe guard truth for tools it does not hold.  Authorized calls
delegate to the kernel, where commit and learning are one atomic step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .causal import Rule, render_rule
from .errors import Unauthorized, WorldError
from .kernel import WorldKernel
from .predicate import Expr
from .state import Transaction, WorldState


@dataclass(frozen=True)
class Role:
    """Named visibility and authorization bundle."""

    name: str
    visible_entity_types: frozenset[str]
    visible_attributes: frozenset[tuple[str, str]]
    visible_relation_types: frozenset[str]
    visible_features: frozenset[int]
    tools: frozenset[str]


@dataclass(frozen=True)
class PolicyRule:
    """One condition/action row; binders are tried in ascending entity-id order."""

    binders: tuple[tuple[str, str], ...]  # (var, entityType)
    when: Expr
    when_text: str
    tool: str
    args: dict[str, Expr]
    arg_texts: dict[str, str]


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    role_name: str
    policy: tuple[PolicyRule, ...] = ()


@dataclass(frozen=True)
class Snapshot:
    """Immutable role-filtered projection of one state version."""

    version: int
    entities: dict[str, dict]
    relations: tuple[tuple, ...]

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "entities": self.entities,
            "relations": sorted(list(t) for t in self.relations),
        }


@dataclass(frozen=True)
class TransactionResult:
    """Outcome of one mediated act call; rejections carry the engine error."""

    committed: bool
    version: int
    transaction: Transaction | None = None
    error: WorldError | None = None

    @property
    def error_class(self) -> str | None:
        return None if self.error is None else type(self.error).__name__


@dataclass(frozen=True)
class RenderedRule:
    rule: Rule
    text: str


def project_state(state: WorldState, role: Role) -> Snapshot:
    entities: dict[str, dict] = {}
    for eid, inst in state.entities.items():
        if inst.type_name not in role.visible_entity_types:
            continue
        attrs = {
            name: value
            for name, value in inst.attrs.items()
            if (inst.type_name, name) in role.visible_attributes
        }
        entities[eid] = {"type": inst.type_name, "attrs": attrs}
    relations = []
    for tup in sorted(state.relations):
        if tup[0] not in role.visible_relation_types:
            continue
        member_types = [state.entities[eid].type_name for eid in tup[1:]]
        if all(t in role.visible_entity_types for t in member_types):
            relations.append(tup)
    return Snapshot(version=state.version, entities=entities, relations=tuple(relations))


def perceive(kernel: WorldKernel, agent_id: str) -> Snapshot:
    """Role-filtered view of the current state; raises UnknownAgent."""
    _, role = kernel.role_of(agent_id)
    return project_state(kernel.state, role)


def query_knowledge(kernel: WorldKernel, agent_id: str) -> list[RenderedRule]:
    """Knowledge view restricted to the role's visible features, rendered and structured."""
    _, role = kernel.role_of(agent_id)
    rules = kernel.learner.knowledge_view(visible_features=role.visible_features)
    return [RenderedRule(rule, render_rule(rule, kernel.terminology)) for rule in rules]


def act(kernel: WorldKernel, agent_id: str, tool: str, args: dict) -> TransactionResult:
    """Authorization gate, then the kernel's atomic commit-and-learn path.

    World-level rejections (authorization, argument typing, guard,
    constraints) come back in the result with the state untouched; an
    unregistered agent raises.
    """
    _, role = kernel.role_of(agent_id)
    if tool not in role.tools:
        return TransactionResult(False, kernel.version, error=Unauthorized(tool))
    try:
        txn = kernel.apply(tool, args)
    except WorldError as exc:
        return TransactionResult(False, kernel.version, error=exc)
    return TransactionResult(True, kernel.version, transaction=txn)


def role_is_superset(wider: Role, narrower: Role) -> bool:
    return (
        wider.visible_entity_types >= narrower.visible_entity_types
        and wider.visible_attributes >= narrower.visible_attributes
        and wider.visible_relation_types >= narrower.visible_relation_types
        and wider.visible_features >= narrower.visible_features
    )
