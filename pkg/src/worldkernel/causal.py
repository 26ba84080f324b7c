"""Learned causal knowledge: terminology, cases, rules, threshold views, and text rendering.

The learning vocabulary is an authored terminology of named boolean
features, each tied to one phase of a transition: ``pre`` features are
closed predicates evaluated on the state before an action, ``post``
features on the state after it, and ``act`` features match the action
itself (by name, optionally narrowed by a predicate over its bound
arguments, evaluated against the pre-state).

A case is the truth vector of one committed transaction over the
terminology.  Rules relate a premise set of pre/act features to one
post feature.  Counts are the source of truth; a rule's probability is
always derived as countBoth / countPremise and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import predicate
from .errors import ScenarioError, UnknownFeature, ZeroSupport
from .predicate import Expr, ParseError, TypeCheckError
from .schema import Schema
from .state import Transaction, WorldState

PHASES = ("pre", "act", "post")


@dataclass(frozen=True)
class Feature:
    """One named boolean observable over transitions."""

    id: int
    name: str
    phase: str
    pred: Expr | None = None  # pre/post phases
    pred_text: str = ""
    action: str = ""  # act phase
    where: Expr | None = None
    where_text: str = ""


@dataclass(frozen=True)
class Terminology:
    features: tuple[Feature, ...] = ()

    def __len__(self) -> int:
        return len(self.features)

    def by_name(self, name: str) -> Feature:
        for f in self.features:
            if f.name == name:
                return f
        raise UnknownFeature(name)

    def premise_ids(self) -> tuple[int, ...]:
        return tuple(f.id for f in self.features if f.phase in ("pre", "act"))

    def post_ids(self) -> tuple[int, ...]:
        return tuple(f.id for f in self.features if f.phase == "post")

    def names_of(self, ids) -> list[str]:
        return [self.features[i].name for i in sorted(ids)]


def build_terminology(doc: object, schema: Schema) -> Terminology:
    """Validate the terminology section and assign dense feature ids in list order."""
    if doc is None:
        return Terminology()
    if not isinstance(doc, dict) or set(doc) != {"features"} or not isinstance(doc["features"], list):
        raise ScenarioError("terminology", 'terminology section must be {"features": [...]}')
    features: list[Feature] = []
    names: set[str] = set()
    for i, f_doc in enumerate(doc["features"]):
        loc = f"terminology.features[{i}]"
        if not isinstance(f_doc, dict):
            raise ScenarioError(loc, "feature must be an object")
        name = f_doc.get("name")
        if not isinstance(name, str) or not name:
            raise ScenarioError(loc, "feature needs a non-empty name")
        if name in names:
            raise ScenarioError(loc, f"duplicate feature name {name!r}")
        names.add(name)
        phase = f_doc.get("phase")
        if phase not in PHASES:
            raise ScenarioError(loc, f"phase must be one of {PHASES}")
        if phase == "act":
            if not {"name", "phase", "action"} <= set(f_doc) or not set(f_doc) <= {
                "name", "phase", "action", "where",
            }:
                raise ScenarioError(loc, 'act feature takes "action" and optional "where"')
            action = f_doc["action"]
            decl = schema.actions.get(action) if isinstance(action, str) else None
            if decl is None:
                raise ScenarioError(loc, f"act feature over undeclared action {action!r}")
            where = None
            where_text = f_doc.get("where", "")
            if where_text:
                where = _parse_checked(where_text, schema, decl.param_env(), loc)
            features.append(Feature(i, name, "act", action=action, where=where, where_text=where_text))
        else:
            if set(f_doc) != {"name", "phase", "pred"}:
                raise ScenarioError(loc, f'{phase} feature takes exactly "name", "phase", "pred"')
            pred = _parse_checked(f_doc["pred"], schema, {}, loc)
            features.append(Feature(i, name, phase, pred=pred, pred_text=f_doc["pred"]))
    return Terminology(tuple(features))


def _parse_checked(text: object, schema: Schema, env: dict, loc: str) -> Expr:
    if not isinstance(text, str):
        raise ScenarioError(loc, "expected predicate text")
    try:
        expr = predicate.parse_expr(text)
        ty = predicate.typecheck(expr, schema, env)
    except (ParseError, TypeCheckError) as exc:
        raise ScenarioError(loc, str(exc)) from exc
    if ty.kind != "bool":
        raise ScenarioError(loc, f"feature predicate must be boolean, got {ty}")
    return expr


@dataclass(frozen=True)
class Case:
    """Truth vector of one committed transaction over a terminology."""

    seq: int
    vector: tuple[bool, ...]
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"case weight must be in (0, 1], got {self.weight}")

    def true_names(self, terminology: Terminology) -> list[str]:
        return [terminology.features[i].name for i, hit in enumerate(self.vector) if hit]


def build_case(
    pre_state: WorldState,
    txn: Transaction,
    post_state: WorldState,
    terminology: Terminology,
) -> Case:
    """Evaluate every feature in its own phase; pre features never see the post-state."""
    vector = []
    for f in terminology.features:
        if f.phase == "pre":
            vector.append(predicate.eval_predicate(pre_state, f.pred))
        elif f.phase == "post":
            vector.append(predicate.eval_predicate(post_state, f.pred))
        else:
            hit = f.action == txn.action
            if hit and f.where is not None:
                hit = predicate.eval_predicate(pre_state, f.where, dict(txn.args))
            vector.append(hit)
    return Case(seq=txn.seq, vector=tuple(vector))


def case_from_names(seq: int, true_names: list[str], terminology: Terminology) -> Case:
    """Rebuild a case vector from the feature names persisted in an event log line."""
    ids = {terminology.by_name(n).id for n in true_names}
    return Case(seq=seq, vector=tuple(i in ids for i in range(len(terminology))))


# -- rules ---------------------------------------------------------------------

def rule_probability(count_both: float, count_premise: float) -> float:
    """Conditional frequency estimate; counts are weighted reals."""
    if count_premise == 0:
        raise ZeroSupport("rule has zero premise count")
    if count_both < 0 or count_premise < 0 or count_both > count_premise:
        raise ValueError(f"inconsistent counts ({count_both}, {count_premise})")
    return count_both / count_premise


@dataclass(frozen=True)
class Rule:
    """Premise feature set implies one post feature, with weighted counts."""

    premise: frozenset[int]
    conclusion: int
    count_premise: float
    count_both: float

    @property
    def p(self) -> float:
        return rule_probability(self.count_both, self.count_premise)

    def sort_key(self) -> tuple:
        return (-self.p, -self.count_premise, tuple(sorted(self.premise)), self.conclusion)


RuleKey = tuple[frozenset, int]


@dataclass
class RuleStore:
    """Count cells keyed by (premise set, conclusion); materialized lazily."""

    counts: dict[RuleKey, list[float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.counts)

    def rule(self, key: RuleKey) -> Rule:
        cp, cb = self.counts[key]
        return Rule(premise=key[0], conclusion=key[1], count_premise=cp, count_both=cb)

    def rules(self) -> list[Rule]:
        return [self.rule(key) for key in sorted(self.counts, key=_key_order)]


def _key_order(key: RuleKey) -> tuple:
    return (tuple(sorted(key[0])), key[1])


def knowledge_view(
    store: RuleStore,
    config,
    visible_features: frozenset[int] | set[int] | None = None,
) -> list[Rule]:
    """Exactly the rules meeting the reliability threshold and support gate.

    With ``visible_features`` given, a rule qualifies only if its whole
    premise and its conclusion are visible.  Output order is total and
    reproducible: probability descending, then support descending, then
    premise ids, then conclusion id.
    """
    out = []
    for key, (cp, cb) in store.counts.items():
        if cp < config.min_support or cp <= 0:
            continue
        if cb / cp < config.theta:
            continue
        if visible_features is not None:
            if not key[0] <= visible_features or key[1] not in visible_features:
                continue
        out.append(Rule(key[0], key[1], cp, cb))
    out.sort(key=Rule.sort_key)
    return out


def render_rule(rule: Rule, terminology: Terminology) -> str:
    """Deterministic one-line text form of a rule.

    ``IF a AND b THEN c [p = 0.667, support = 3.0]`` with premise names
    in feature-id order; an empty premise renders as ``(always)``.
    """
    n = len(terminology)
    for fid in sorted(rule.premise | {rule.conclusion}):
        if not 0 <= fid < n:
            raise UnknownFeature(fid)
    if rule.premise:
        premise = " AND ".join(terminology.features[i].name for i in sorted(rule.premise))
    else:
        premise = "(always)"
    conclusion = terminology.features[rule.conclusion].name
    return f"IF {premise} THEN {conclusion} [p = {rule.p:.3f}, support = {rule.count_premise:.1f}]"


def rules_to_json(rules: list[Rule], terminology: Terminology) -> list[dict]:
    """Structured export; premise names listed in feature-id order."""
    return [
        {
            "premise": terminology.names_of(r.premise),
            "conclusion": terminology.features[r.conclusion].name,
            "p": r.p,
            "countPremise": r.count_premise,
            "countBoth": r.count_both,
        }
        for r in rules
    ]
