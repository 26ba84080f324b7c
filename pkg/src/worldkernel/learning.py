"""Incremental rule-count maintenance with a batch recount used as its oracle.

Update law, applied once per case in arrival order: when decay is
configured (gamma < 1) every existing count is first multiplied by
gamma; then for every subset B of the case's true pre/act features with
|B| <= Lmax (the empty set included) and every post feature c, the cell
(B, c) gains the case's weight on countPremise, and on countBoth too
iff c is true in the case.  Cells are materialized on first increment.

``Learner.ingest_case`` is the incremental path the kernel drives on
every commit; ``batch_learn`` recomputes a store from scratch with one
pass of the same law and is the ground truth the incremental path is
tested against.  With gamma = 1 the law is order-independent and counts
are plain weighted subset-occurrence sums; with decay it is not.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

from .causal import Case, Rule, RuleKey, RuleStore, Terminology, knowledge_view
from .errors import DecayActive, ScenarioError, TerminologyMismatch


@dataclass(frozen=True)
class LearnerConfig:
    """Reliability threshold, support gate, premise size cap, and decay factor."""

    theta: float
    min_support: float
    lmax: int
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")
        if not self.min_support > 0:
            raise ValueError(f"minSupport must be positive, got {self.min_support}")
        if self.lmax < 1:
            raise ValueError(f"Lmax must be at least 1, got {self.lmax}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


DEFAULT_CONFIG = LearnerConfig(theta=1.0, min_support=1.0, lmax=1, gamma=1.0)


def config_from_doc(doc: object) -> LearnerConfig:
    """Read the learner section {"theta", "minSupport", "Lmax", "gamma"?}."""
    if doc is None:
        return DEFAULT_CONFIG
    if not isinstance(doc, dict) or not {"theta", "minSupport", "Lmax"} <= set(doc) or not set(doc) <= {
        "theta", "minSupport", "Lmax", "gamma",
    }:
        raise ScenarioError("learner", 'learner section needs "theta", "minSupport", "Lmax", optional "gamma"')
    try:
        return LearnerConfig(
            theta=float(doc["theta"]),
            min_support=float(doc["minSupport"]),
            lmax=int(doc["Lmax"]),
            gamma=float(doc.get("gamma", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError("learner", str(exc)) from exc


def _true_premise(case: Case, terminology: Terminology) -> list[int]:
    return [i for i in terminology.premise_ids() if case.vector[i]]


def _premise_subsets(true_ids: list[int], lmax: int):
    for size in range(0, min(lmax, len(true_ids)) + 1):
        yield from combinations(true_ids, size)


class Learner:
    """Single-writer incremental learner over one terminology and config."""

    def __init__(self, terminology: Terminology, config: LearnerConfig) -> None:
        self.terminology = terminology
        self.config = config
        self.store = RuleStore()
        self.last_written_cells: tuple[RuleKey, ...] = ()

    def _status(self, counts: list[float]) -> bool:
        cp, cb = counts
        return cp >= self.config.min_support and cp > 0 and cb / cp >= self.config.theta

    def ingest_case(self, case: Case) -> list[Rule]:
        """Fold one case into the store; returns rules whose view membership flipped.

        With gamma = 1 only the cells named by the case are read or
        written; decay necessarily touches every materialized cell.
        """
        if len(case.vector) != len(self.terminology):
            raise TerminologyMismatch(
                f"case vector has {len(case.vector)} features, terminology has {len(self.terminology)}"
            )
        counts = self.store.counts
        decaying = self.config.gamma < 1.0

        true_premise = _true_premise(case, self.terminology)
        post_ids = self.terminology.post_ids()
        written = [
            (frozenset(subset), c)
            for subset in _premise_subsets(true_premise, self.config.lmax)
            for c in post_ids
        ]

        # Membership status before this case touches anything; decay can
        # flip any materialized cell, so then every cell is a candidate.
        if decaying:
            before = {key: self._status(cell) for key, cell in counts.items()}
            for key in written:
                before.setdefault(key, False)
            g = self.config.gamma
            for cell in counts.values():
                cell[0] *= g
                cell[1] *= g
        else:
            before = {
                key: self._status(counts[key]) if key in counts else False for key in written
            }

        w = case.weight
        for key in written:
            cell = counts.get(key)
            if cell is None:
                cell = counts[key] = [0.0, 0.0]
            cell[0] += w
            if case.vector[key[1]]:
                cell[1] += w

        self.last_written_cells = tuple(written)
        changed = [
            self.store.rule(key)
            for key, was_in in before.items()
            if self._status(counts[key]) != was_in
        ]
        changed.sort(key=lambda r: (tuple(sorted(r.premise)), r.conclusion))
        return changed

    def knowledge_view(self, visible_features=None) -> list[Rule]:
        return knowledge_view(self.store, self.config, visible_features)

    def locality_report(self, case: Case) -> int:
        """Predicted number of cells one ingest of this case writes.

        Defined only without decay: (count of true pre/act subsets with
        size <= Lmax) times (number of post features), computed
        combinatorially rather than by enumeration.
        """
        if self.config.gamma < 1.0:
            raise DecayActive("locality accounting requires gamma = 1")
        if len(case.vector) != len(self.terminology):
            raise TerminologyMismatch(
                f"case vector has {len(case.vector)} features, terminology has {len(self.terminology)}"
            )
        k = len(_true_premise(case, self.terminology))
        subsets = sum(comb(k, size) for size in range(0, min(self.config.lmax, k) + 1))
        return subsets * len(self.terminology.post_ids())


def batch_learn(terminology: Terminology, cases: list[Case], config: LearnerConfig) -> RuleStore:
    """Recount every cell from scratch by one pass of the update law; the oracle."""
    counts: dict[RuleKey, list[float]] = {}
    premise_ids = terminology.premise_ids()
    post_ids = terminology.post_ids()
    for case in cases:
        if len(case.vector) != len(terminology):
            raise TerminologyMismatch(
                f"case vector has {len(case.vector)} features, terminology has {len(terminology)}"
            )
        if config.gamma < 1.0:
            for cell in counts.values():
                cell[0] *= config.gamma
                cell[1] *= config.gamma
        true_ids = [i for i in premise_ids if case.vector[i]]
        for size in range(0, min(config.lmax, len(true_ids)) + 1):
            for subset in combinations(true_ids, size):
                premise = frozenset(subset)
                for c in post_ids:
                    cell = counts.setdefault((premise, c), [0.0, 0.0])
                    cell[0] += case.weight
                    if case.vector[c]:
                        cell[1] += case.weight
    store = RuleStore()
    store.counts = counts
    return store
