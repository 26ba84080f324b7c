"""worldkernel: a transactional world engine for multi-agent systems.

A typed object ontology with guarded actions and state invariants forms
the shared factual layer; every committed transaction feeds an
incremental learner that maintains probabilistic rules over an authored
feature terminology.  Agents interact only through role-scoped
mediation (perceive, query knowledge, act), and the whole world is
reachable over a small JSON HTTP gateway or the ``worldkernel`` CLI.
"""

from .agents import (
    AgentSpec,
    RenderedRule,
    Role,
    Snapshot,
    TransactionResult,
    act,
    perceive,
    project_state,
    query_knowledge,
)
from .causal import (
    Case,
    Feature,
    Rule,
    RuleStore,
    Terminology,
    build_case,
    build_terminology,
    case_from_names,
    knowledge_view,
    render_rule,
    rule_probability,
    rules_to_json,
)
from .gateway import GatewayHandle, export_tool_manifest, serve
from .kernel import WorldKernel
from .learning import Learner, LearnerConfig, batch_learn
from .predicate import eval_predicate, parse_expr, typecheck
from .runner import RunReport, run_loop
from .scenario import Scenario, build_kernel, demo_scenario_path, load_scenario, parse_scenario
from .schema import ActionDecl, Domain, Schema, define_schema
from .state import (
    Transaction,
    WorldState,
    apply_action,
    canonical_json,
    init_state,
    replay,
    state_hash,
)
from .worldscope import (
    ApplicabilityReport,
    WorldProfile,
    assess_applicability,
    classify_archetype,
)

__version__ = "0.1.0"

__all__ = [
    "ActionDecl",
    "AgentSpec",
    "ApplicabilityReport",
    "Case",
    "Domain",
    "Feature",
    "GatewayHandle",
    "Learner",
    "LearnerConfig",
    "RenderedRule",
    "Role",
    "Rule",
    "RuleStore",
    "RunReport",
    "Scenario",
    "Schema",
    "Snapshot",
    "Terminology",
    "Transaction",
    "TransactionResult",
    "WorldKernel",
    "WorldProfile",
    "WorldState",
    "act",
    "apply_action",
    "assess_applicability",
    "batch_learn",
    "build_case",
    "build_kernel",
    "build_terminology",
    "canonical_json",
    "case_from_names",
    "classify_archetype",
    "define_schema",
    "demo_scenario_path",
    "eval_predicate",
    "export_tool_manifest",
    "init_state",
    "knowledge_view",
    "load_scenario",
    "parse_expr",
    "parse_scenario",
    "perceive",
    "project_state",
    "query_knowledge",
    "render_rule",
    "replay",
    "rule_probability",
    "rules_to_json",
    "run_loop",
    "serve",
    "state_hash",
    "typecheck",
]
