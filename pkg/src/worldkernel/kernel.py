"""Single-writer kernel tying state transitions, the event log, and learning together.

All writes funnel through :meth:`WorldKernel.apply` under one lock:
guard and constraints are checked by the state layer, the committed
transition is turned into a case over the terminology, the case is
folded into the learner, and the event-log line is appended, all before
the call returns.  Readers take the current state reference, which is
never mutated afterwards, so snapshots are safe to share across
threads.
"""

from __future__ import annotations

import logging
import threading

from . import state as state_mod
from .causal import Terminology, build_case
from .errors import UnknownAgent, UnknownRole
from .learning import DEFAULT_CONFIG, Learner, LearnerConfig
from .schema import Schema
from .state import Transaction, WorldState

logger = logging.getLogger(__name__)


class WorldKernel:
    """Owns one world: schema, live state, event log, learner, and registries."""

    def __init__(
        self,
        schema: Schema,
        initial: WorldState,
        terminology: Terminology | None = None,
        config: LearnerConfig | None = None,
    ) -> None:
        self.schema = schema
        self._state = initial
        self.terminology = terminology or Terminology()
        self.learner = Learner(self.terminology, config or DEFAULT_CONFIG)
        self.transactions: list[Transaction] = []
        self.log_entries: list[dict] = []
        self.roles: dict[str, object] = {}
        self.agents: dict[str, object] = {}
        self._lock = threading.Lock()

    # -- registries -----------------------------------------------------------

    def add_role(self, role) -> None:
        self.roles[role.name] = role

    def add_agent(self, spec) -> None:
        self.agents[spec.agent_id] = spec

    def role_of(self, agent_id: str):
        spec = self.agents.get(agent_id)
        if spec is None:
            raise UnknownAgent(agent_id)
        role = self.roles.get(spec.role_name)
        if role is None:
            raise UnknownRole(spec.role_name)
        return spec, role

    # -- reads ----------------------------------------------------------------

    @property
    def state(self) -> WorldState:
        return self._state

    @property
    def version(self) -> int:
        return self._state.version

    def state_hash(self) -> str:
        return state_mod.state_hash(self._state)

    # -- the commit path ------------------------------------------------------

    def apply(self, action_name: str, args: dict) -> Transaction:
        """Apply one action atomically; on commit, learning runs before returning.

        Raises the state layer's errors unchanged; any raise leaves the
        kernel exactly as it was.
        """
        with self._lock:
            pre = self._state
            post, txn = state_mod.apply_action(pre, self.schema, action_name, args)
            case = build_case(pre, txn, post, self.terminology)
            changed = self.learner.ingest_case(case)
            self.transactions.append(txn)
            self.log_entries.append(txn.log_entry(case.true_names(self.terminology)))
            self._state = post
            if changed:
                logger.debug("seq %d flipped %d rule(s) in the knowledge view", txn.seq, len(changed))
            return txn
