"""Exception hierarchy for the world engine.

Every failure a caller is expected to branch on gets its own class with
structured fields; all inherit from :class:`WorldError` so embedders can
catch engine failures wholesale.  Any error raised while an action is
being applied leaves the caller-visible state untouched.
"""

from __future__ import annotations


class WorldError(Exception):
    """Base class for every engine-raised error."""


class SchemaError(WorldError):
    """Schema document rejected: duplicate name, dangling reference, or ill-typed declaration."""

    def __init__(self, location: str, reason: str) -> None:
        super().__init__(f"{location}: {reason}")
        self.location = location
        self.reason = reason


class ScenarioError(WorldError):
    """Scenario document rejected in a section other than the schema (init, terminology, roles, agents, learner, run)."""

    def __init__(self, location: str, reason: str) -> None:
        super().__init__(f"{location}: {reason}")
        self.location = location
        self.reason = reason


class StateTypeError(WorldError):
    """Attribute value outside its declared domain, or a reference to a missing entity.

    Named StateTypeError rather than TypeError to stay clear of the builtin.
    """

    def __init__(self, entity_id: str, attr: str | None, reason: str) -> None:
        where = f"{entity_id}.{attr}" if attr else entity_id
        super().__init__(f"{where}: {reason}")
        self.entity_id = entity_id
        self.attr = attr
        self.reason = reason


class ConstraintViolation(WorldError):
    """A named state invariant evaluated false on a candidate state."""

    def __init__(self, constraint_name: str) -> None:
        super().__init__(f"constraint {constraint_name!r} violated")
        self.constraint_name = constraint_name


class GuardViolation(WorldError):
    """An action's guard evaluated false on the pre-state."""

    def __init__(self, action_name: str) -> None:
        super().__init__(f"guard of action {action_name!r} evaluated false")
        self.action_name = action_name


class UnknownAction(WorldError):
    def __init__(self, action_name: str) -> None:
        super().__init__(f"action {action_name!r} is not declared")
        self.action_name = action_name


class ArgTypeError(WorldError):
    """A bound argument does not fit the declared parameter list."""

    def __init__(self, action_name: str, param: str, reason: str) -> None:
        super().__init__(f"{action_name}({param}): {reason}")
        self.action_name = action_name
        self.param = param
        self.reason = reason


class EvalError(WorldError):
    """Expression evaluation failed: unbound variable or an entity that vanished mid-eval."""


class CorruptLog(WorldError):
    """Event log unusable: sequence gap or a delta that no longer applies."""

    def __init__(self, seq: int, reason: str = "") -> None:
        msg = f"corrupt log at seq {seq}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.seq = seq
        self.reason = reason


class TerminologyMismatch(WorldError):
    """Case vector length does not match the terminology the store was built for."""


class ZeroSupport(WorldError):
    """Probability requested for a rule whose premise count is zero."""


class DecayActive(WorldError):
    """Locality accounting is only defined when no decay is configured."""


class UnknownAgent(WorldError):
    def __init__(self, agent_id: str) -> None:
        super().__init__(f"agent {agent_id!r} is not registered")
        self.agent_id = agent_id


class UnknownRole(WorldError):
    def __init__(self, role_name: str) -> None:
        super().__init__(f"role {role_name!r} is not registered")
        self.role_name = role_name


class Unauthorized(WorldError):
    """Agent's role does not authorize the requested tool; raised before the guard is even looked at."""

    def __init__(self, tool: str) -> None:
        super().__init__(f"tool {tool!r} is not authorized for this role")
        self.tool = tool


class UnknownFeature(WorldError):
    def __init__(self, feature: object) -> None:
        super().__init__(f"feature {feature!r} is not in the terminology")
        self.feature = feature
