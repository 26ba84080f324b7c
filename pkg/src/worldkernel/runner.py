"""Seeded closed-loop execution: perceive, match policy, act, learn, repeat.

Each round visits the agents in a freshly shuffled order drawn from one
seeded generator, so scheduling order effects are exposed while the
whole run stays a pure function of (scenario, steps, seed).  An agent's
turn evaluates its policy rows top-down; for a row with binders, the
candidate entities are tried in ascending id order and the first
combination satisfying the condition fires.  A fired action that the
kernel rejects still consumes the turn and is tallied by error class.

The event log is written as JSON Lines, one committed transaction per
line with keys seq, action, args, delta, caseFeatures, rendered with
sorted keys so identical runs produce byte-identical logs.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

from . import agents as agents_mod
from .causal import render_rule, rules_to_json
from .kernel import WorldKernel
from .predicate import entity_order_key, eval_predicate, eval_term
from .scenario import Scenario, build_kernel
from .state import canonical_json

logger = logging.getLogger(__name__)

EVENT_LOG_NAME = "events.jsonl"


@dataclass
class AgentStats:
    committed: int = 0
    noops: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def reject(self, error_class: str) -> None:
        self.rejected[error_class] = self.rejected.get(error_class, 0) + 1

    def to_json_dict(self) -> dict:
        return {"committed": self.committed, "noops": self.noops, "rejected": self.rejected}


@dataclass
class RunReport:
    steps: int
    agents: dict[str, AgentStats]
    rules: list[dict]
    rendered_rules: list[str]
    final_state_hash: str
    event_log: str  # file name, relative to the run's output directory

    def to_json_dict(self) -> dict:
        return {
            "steps": self.steps,
            "agents": {aid: stats.to_json_dict() for aid, stats in self.agents.items()},
            "rules": self.rules,
            "renderedRules": self.rendered_rules,
            "finalStateHash": self.final_state_hash,
            "eventLog": self.event_log,
        }


def _find_binding(kernel: WorldKernel, row) -> dict[str, object] | None:
    """First variable binding satisfying the row's condition, in canonical order."""
    state = kernel.state
    pools = []
    for _, type_name in row.binders:
        ids = sorted(
            (eid for eid, inst in state.entities.items() if inst.type_name == type_name),
            key=entity_order_key,
        )
        if not ids:
            return None
        pools.append(ids)
    names = [var for var, _ in row.binders]
    for combo in product(*pools):
        bindings = dict(zip(names, combo))
        if eval_predicate(state, row.when, bindings):
            return bindings
    return None


def _agent_turn(kernel: WorldKernel, spec, stats: AgentStats) -> None:
    agents_mod.perceive(kernel, spec.agent_id)  # the loop's view step; policies see the same version
    for row in spec.policy:
        bindings = _find_binding(kernel, row)
        if bindings is None:
            continue
        args = {
            name: eval_term(expr, kernel.state, bindings) for name, expr in row.args.items()
        }
        result = agents_mod.act(kernel, spec.agent_id, row.tool, args)
        if result.committed:
            stats.committed += 1
        else:
            stats.reject(result.error_class or "WorldError")
        return
    stats.noops += 1


def run_loop(
    scenario: Scenario, steps: int, seed: int, out_dir: str | Path
) -> tuple[RunReport, WorldKernel]:
    """Execute the scenario for ``steps`` rounds and write the event log.

    Returns the report and the finished kernel.  Deterministic: the seed
    fixes agent scheduling, and nothing else in the loop is stochastic.
    """
    kernel = build_kernel(scenario)
    rng = random.Random(seed)
    agent_ids = list(scenario.agents)
    stats = {aid: AgentStats() for aid in agent_ids}

    for _ in range(steps):
        order = list(agent_ids)
        rng.shuffle(order)
        for aid in order:
            _agent_turn(kernel, scenario.agents[aid], stats[aid])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / EVENT_LOG_NAME
    with log_path.open("w", encoding="utf-8") as fh:
        for entry in kernel.log_entries:
            fh.write(canonical_json(entry) + "\n")

    view = kernel.learner.knowledge_view()
    report = RunReport(
        steps=steps,
        agents=stats,
        rules=rules_to_json(view, kernel.terminology),
        rendered_rules=[render_rule(r, kernel.terminology) for r in view],
        final_state_hash=kernel.state_hash(),
        event_log=EVENT_LOG_NAME,
    )
    logger.debug(
        "run finished: %d steps, version %d, %d rules in view",
        steps, kernel.version, len(view),
    )
    return report, kernel
