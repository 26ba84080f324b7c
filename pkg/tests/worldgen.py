"""Shared generators for the test suite: a small bank world, random call
sequences against it, and synthetic terminologies/cases for the learner."""

from __future__ import annotations

import random

from worldkernel.causal import Case, Feature, Terminology
from worldkernel.learning import LearnerConfig


def bank_schema_doc() -> dict:
    return {
        "name": "toy-bank",
        "entityTypes": {
            "Account": {
                "owner": "string",
                "balance": "integer",
                "tier": {"enum": ["basic", "gold"]},
            },
        },
        "relationTypes": {
            "Friend": [
                {"name": "a", "type": "Account"},
                {"name": "b", "type": "Account"},
            ],
        },
        "actions": {
            "deposit": {
                "params": [
                    {"name": "acct", "type": {"ref": "Account"}},
                    {"name": "amount", "type": "integer"},
                ],
                "guard": "amount > 0",
                "effects": [
                    {"op": "setAttribute", "entity": "acct", "attr": "balance",
                     "value": "acct.balance + amount"},
                ],
            },
            "withdraw": {
                "params": [
                    {"name": "acct", "type": {"ref": "Account"}},
                    {"name": "amount", "type": "integer"},
                ],
                "guard": "amount > 0",
                "effects": [
                    {"op": "setAttribute", "entity": "acct", "attr": "balance",
                     "value": "acct.balance - amount"},
                ],
            },
            "transfer": {
                "params": [
                    {"name": "src", "type": {"ref": "Account"}},
                    {"name": "dst", "type": {"ref": "Account"}},
                    {"name": "amount", "type": "integer"},
                ],
                "guard": "amount > 0 and not src = dst",
                "effects": [
                    {"op": "setAttribute", "entity": "src", "attr": "balance",
                     "value": "src.balance - amount"},
                    {"op": "setAttribute", "entity": "dst", "attr": "balance",
                     "value": "dst.balance + amount"},
                ],
            },
            "promote": {
                "params": [{"name": "acct", "type": {"ref": "Account"}}],
                "guard": "acct.tier = 'basic' and acct.balance >= 100",
                "effects": [
                    {"op": "setAttribute", "entity": "acct", "attr": "tier", "value": "'gold'"},
                ],
            },
            "open_account": {
                "params": [
                    {"name": "owner", "type": "string"},
                    {"name": "start", "type": "integer"},
                ],
                "guard": "start >= 0",
                "effects": [
                    {"op": "createEntity", "type": "Account",
                     "attrs": {"owner": "owner", "balance": "start", "tier": "'basic'"}},
                ],
            },
            "close_account": {
                "params": [{"name": "acct", "type": {"ref": "Account"}}],
                "guard": "acct.balance = 0",
                "effects": [{"op": "deleteEntity", "entity": "acct"}],
            },
            "befriend": {
                "params": [
                    {"name": "a", "type": {"ref": "Account"}},
                    {"name": "b", "type": {"ref": "Account"}},
                ],
                "guard": "not a = b",
                "effects": [
                    {"op": "addRelationTuple", "relation": "Friend", "entities": ["a", "b"]},
                ],
            },
            "unfriend": {
                "params": [
                    {"name": "a", "type": {"ref": "Account"}},
                    {"name": "b", "type": {"ref": "Account"}},
                ],
                "guard": "Friend(a, b)",
                "effects": [
                    {"op": "removeRelationTuple", "relation": "Friend", "entities": ["a", "b"]},
                ],
            },
        },
        "constraints": [
            {"name": "non-negative-balance", "expr": "forall a: Account. a.balance >= 0"},
            {"name": "balance-cap", "expr": "forall a: Account. a.balance <= 100000"},
        ],
    }


def bank_init_doc() -> dict:
    return {
        "entities": [
            {"key": "alice", "type": "Account",
             "attrs": {"owner": "alice", "balance": 50, "tier": "basic"}},
            {"key": "bob", "type": "Account",
             "attrs": {"owner": "bob", "balance": 10, "tier": "basic"}},
            {"key": "carol", "type": "Account",
             "attrs": {"owner": "carol", "balance": 0, "tier": "basic"}},
        ],
        "relations": [
            {"relation": "Friend", "entities": ["alice", "bob"]},
        ],
    }


def bank_terminology_doc() -> dict:
    return {
        "features": [
            {"name": "pre:someRich", "phase": "pre",
             "pred": "exists a: Account. a.balance >= 100"},
            {"name": "act:deposit", "phase": "act", "action": "deposit"},
            {"name": "act:bigDeposit", "phase": "act", "action": "deposit",
             "where": "amount >= 50"},
            {"name": "act:withdraw", "phase": "act", "action": "withdraw"},
            {"name": "post:someRich", "phase": "post",
             "pred": "exists a: Account. a.balance >= 100"},
            {"name": "post:someGold", "phase": "post",
             "pred": "exists a: Account. a.tier = 'gold'"},
        ],
    }


def bank_scenario_doc() -> dict:
    return {
        "schema": bank_schema_doc(),
        "init": bank_init_doc(),
        "terminology": bank_terminology_doc(),
        "roles": [
            {"name": "teller",
             "visibleEntityTypes": "all", "visibleAttributes": "all",
             "visibleRelationTypes": "all", "visibleFeatures": "all", "tools": "all"},
            {"name": "auditor",
             "visibleEntityTypes": ["Account"],
             "visibleAttributes": {"Account": ["owner", "balance"]},
             "visibleRelationTypes": ["Friend"],
             "visibleFeatures": ["pre:someRich", "post:someRich"],
             "tools": []},
        ],
        "agents": [
            {"id": "teller1", "role": "teller", "policy": []},
            {"id": "audit1", "role": "auditor", "policy": []},
        ],
        "learner": {"theta": 0.6, "minSupport": 2, "Lmax": 2, "gamma": 1.0},
    }


def random_bank_call(rng: random.Random, live_hint: list[str]) -> tuple[str, dict]:
    """One action call, deliberately mixing valid and invalid shapes."""
    ids = live_hint + ["e999", "nope"]
    amounts = [-5, 0, 1, 3, 7, 10, 49, 50, 120, 400, 99999, 200000]
    kind = rng.randrange(12)
    if kind <= 3:
        return ("deposit", {"acct": rng.choice(ids), "amount": rng.choice(amounts)})
    if kind <= 6:
        return ("withdraw", {"acct": rng.choice(ids), "amount": rng.choice(amounts)})
    if kind == 7:
        return ("transfer", {"src": rng.choice(ids), "dst": rng.choice(ids),
                             "amount": rng.choice(amounts)})
    if kind == 8:
        return ("promote", {"acct": rng.choice(ids)})
    if kind == 9:
        return ("open_account", {"owner": f"u{rng.randrange(5)}", "start": rng.choice(amounts)})
    if kind == 10:
        choice = rng.randrange(4)
        if choice == 0:
            return ("close_account", {"acct": rng.choice(ids)})
        if choice == 1:
            return ("befriend", {"a": rng.choice(ids), "b": rng.choice(ids)})
        if choice == 2:
            return ("unfriend", {"a": rng.choice(ids), "b": rng.choice(ids)})
        return ("deposit", {"acct": rng.choice(ids), "amount": "ten"})  # ill-typed
    # unknown action, or missing/extra argument names
    bad = rng.randrange(3)
    if bad == 0:
        return ("audit_books", {})
    if bad == 1:
        return ("deposit", {"acct": rng.choice(ids)})
    return ("deposit", {"acct": rng.choice(ids), "amount": 5, "note": "hi"})


# -- synthetic learner inputs ----------------------------------------------------

def synthetic_terminology(rng: random.Random, n_features: int) -> Terminology:
    """Random phase assignment with at least one premise and one post feature."""
    phases = []
    for i in range(n_features):
        phases.append(rng.choice(["pre", "act", "post"]))
    if n_features >= 2:
        if all(p == "post" for p in phases):
            phases[0] = rng.choice(["pre", "act"])
        if all(p != "post" for p in phases):
            phases[-1] = "post"
    features = tuple(
        Feature(i, f"f{i}:{phases[i]}", phases[i]) for i in range(n_features)
    )
    return Terminology(features)


def random_cases(
    rng: random.Random,
    terminology: Terminology,
    n_cases: int,
    *,
    random_weights: bool = False,
) -> list[Case]:
    p_true = rng.uniform(0.2, 0.7)
    cases = []
    for seq in range(1, n_cases + 1):
        vector = tuple(rng.random() < p_true for _ in range(len(terminology)))
        weight = rng.uniform(0.05, 1.0) if random_weights else 1.0
        cases.append(Case(seq=seq, vector=vector, weight=weight))
    return cases


def closed_form_counts(
    terminology: Terminology, cases: list[Case], config: LearnerConfig
) -> dict[tuple[frozenset, int], tuple[float, float]]:
    """Quadratic recomputation: each cell as an explicit sum of decayed weights.

    Independent of both the incremental fold and the batch pass; the
    decay factor enters as an explicit power per case.
    """
    from itertools import combinations

    premise_ids = terminology.premise_ids()
    post_ids = terminology.post_ids()
    n = len(cases)
    keys: set[tuple[frozenset, int]] = set()
    for case in cases:
        true_ids = [i for i in premise_ids if case.vector[i]]
        for size in range(0, min(config.lmax, len(true_ids)) + 1):
            for subset in combinations(true_ids, size):
                for c in post_ids:
                    keys.add((frozenset(subset), c))
    out = {}
    for premise, c in keys:
        cp = 0.0
        cb = 0.0
        for idx, case in enumerate(cases, start=1):
            if all(case.vector[i] for i in premise):
                decayed = case.weight * config.gamma ** (n - idx)
                cp += decayed
                if case.vector[c]:
                    cb += decayed
        out[(premise, c)] = (cp, cb)
    return out
