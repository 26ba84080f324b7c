"""Terminology, cases, rule probability, threshold views, rendering."""

from __future__ import annotations

import re

import pytest

from worldkernel import (
    apply_action,
    build_case,
    build_terminology,
    case_from_names,
    define_schema,
    init_state,
    knowledge_view,
    render_rule,
    rule_probability,
)
from worldkernel.causal import Case, Rule, RuleStore, Terminology
from worldkernel.errors import ScenarioError, UnknownFeature, ZeroSupport
from worldkernel.learning import LearnerConfig

from worldgen import bank_init_doc, bank_schema_doc, bank_terminology_doc


@pytest.fixture(scope="module")
def schema():
    return define_schema(bank_schema_doc())


@pytest.fixture(scope="module")
def terminology(schema):
    return build_terminology(bank_terminology_doc(), schema)


@pytest.fixture()
def state(schema):
    return init_state(schema, bank_init_doc())


# -- terminology -------------------------------------------------------------------

def test_ids_are_dense_in_list_order(terminology):
    assert [f.id for f in terminology.features] == list(range(6))
    assert terminology.premise_ids() == (0, 1, 2, 3)
    assert terminology.post_ids() == (4, 5)


def test_duplicate_feature_names_rejected(schema):
    doc = {"features": [
        {"name": "f", "phase": "pre", "pred": "true"},
        {"name": "f", "phase": "post", "pred": "true"},
    ]}
    with pytest.raises(ScenarioError, match="duplicate"):
        build_terminology(doc, schema)


def test_open_pre_feature_rejected(schema):
    doc = {"features": [{"name": "f", "phase": "pre", "pred": "a.balance > 0"}]}
    with pytest.raises(ScenarioError, match="unbound"):
        build_terminology(doc, schema)


def test_act_feature_over_unknown_action_rejected(schema):
    doc = {"features": [{"name": "f", "phase": "act", "action": "audit"}]}
    with pytest.raises(ScenarioError, match="audit"):
        build_terminology(doc, schema)


def test_act_where_typechecked_against_params(schema):
    doc = {"features": [{"name": "f", "phase": "act", "action": "deposit",
                          "where": "amount > acct.balance"}]}
    build_terminology(doc, schema)
    bad = {"features": [{"name": "f", "phase": "act", "action": "deposit",
                          "where": "missing > 0"}]}
    with pytest.raises(ScenarioError, match="unbound"):
        build_terminology(bad, schema)


# -- buildCase ----------------------------------------------------------------------

def test_empty_terminology_gives_empty_vector(schema, state):
    post, txn = apply_action(state, schema, "deposit", {"acct": "e2", "amount": 1})
    case = build_case(state, txn, post, Terminology())
    assert case.vector == ()


def test_act_features_match_action_and_args(schema, terminology, state):
    post, txn = apply_action(state, schema, "deposit", {"acct": "e2", "amount": 60})
    case = build_case(state, txn, post, terminology)
    names = set(case.true_names(terminology))
    assert "act:deposit" in names
    assert "act:bigDeposit" in names  # amount >= 50
    assert "act:withdraw" not in names

    post2, txn2 = apply_action(state, schema, "deposit", {"acct": "e2", "amount": 5})
    case2 = build_case(state, txn2, post2, terminology)
    assert "act:bigDeposit" not in set(case2.true_names(terminology))


def test_phase_separation(schema, terminology, state):
    # crossing the rich threshold: pre false, post true
    post, txn = apply_action(state, schema, "deposit", {"acct": "e1", "amount": 60})
    case = build_case(state, txn, post, terminology)
    names = set(case.true_names(terminology))
    assert "pre:someRich" not in names
    assert "post:someRich" in names


def test_feature_implied_false_by_constraint(schema, state):
    # the non-negative constraint makes "some balance below zero" unsatisfiable
    doc = {"features": [{"name": "odd", "phase": "pre",
                          "pred": "exists a: Account. a.balance < 0"}]}
    term = build_terminology(doc, schema)
    post, txn = apply_action(state, schema, "deposit", {"acct": "e2", "amount": 1})
    case = build_case(state, txn, post, term)
    assert case.vector == (False,)


def test_case_round_trips_through_names(schema, terminology, state):
    post, txn = apply_action(state, schema, "withdraw", {"acct": "e1", "amount": 5})
    case = build_case(state, txn, post, terminology)
    again = case_from_names(case.seq, case.true_names(terminology), terminology)
    assert again.vector == case.vector


def test_case_weight_bounds():
    with pytest.raises(ValueError):
        Case(seq=1, vector=(True,), weight=0.0)
    with pytest.raises(ValueError):
        Case(seq=1, vector=(True,), weight=1.5)


# -- probability ---------------------------------------------------------------------

def test_rule_probability_bounds():
    assert rule_probability(0, 4) == 0.0
    assert rule_probability(4, 4) == 1.0
    assert rule_probability(2, 3) == 2 / 3


def test_zero_support_raises():
    with pytest.raises(ZeroSupport):
        rule_probability(0, 0)


def test_inconsistent_counts_rejected():
    with pytest.raises(ValueError):
        rule_probability(5, 3)


# -- knowledge view -------------------------------------------------------------------

def _store_with(cells: dict) -> RuleStore:
    store = RuleStore()
    for key, (cp, cb) in cells.items():
        store.counts[key] = [cp, cb]
    return store


def test_threshold_excludes_then_includes():
    store = _store_with({(frozenset({0}), 4): (3.0, 2.0)})
    assert knowledge_view(store, LearnerConfig(theta=0.7, min_support=1, lmax=2)) == []
    view = knowledge_view(store, LearnerConfig(theta=0.6, min_support=1, lmax=2))
    assert len(view) == 1 and view[0].p == 2 / 3


def test_min_support_gate():
    store = _store_with({(frozenset({0}), 4): (1.0, 1.0)})
    assert knowledge_view(store, LearnerConfig(theta=0.5, min_support=2, lmax=2)) == []


def test_visible_features_filter_conclusion_and_premise():
    store = _store_with({(frozenset({0}), 4): (3.0, 3.0)})
    config = LearnerConfig(theta=0.5, min_support=1, lmax=2)
    assert knowledge_view(store, config, visible_features={0}) == []
    assert knowledge_view(store, config, visible_features={4}) == []
    assert len(knowledge_view(store, config, visible_features={0, 4})) == 1


def test_view_order_is_total_and_reproducible():
    store = _store_with({
        (frozenset({1}), 4): (4.0, 4.0),
        (frozenset({0}), 4): (4.0, 4.0),
        (frozenset({0}), 5): (8.0, 8.0),
        (frozenset({2}), 4): (6.0, 3.0),
    })
    config = LearnerConfig(theta=0.0, min_support=1, lmax=2)
    view = knowledge_view(store, config)
    keys = [(set(r.premise), r.conclusion) for r in view]
    # p descending, then support descending, then ids
    assert keys == [({0}, 5), ({0}, 4), ({1}, 4), ({2}, 4)]
    assert knowledge_view(store, config) == view


def test_counts_are_source_of_truth():
    store = _store_with({(frozenset({0, 1}), 4): (8.0, 6.0)})
    rule = store.rules()[0]
    assert rule.p == rule.count_both / rule.count_premise


# -- rendering -----------------------------------------------------------------------

def test_render_formatting_contract(terminology):
    rule = Rule(premise=frozenset({1}), conclusion=4, count_premise=3.0, count_both=2.0)
    text = render_rule(rule, terminology)
    assert text == "IF act:deposit THEN post:someRich [p = 0.667, support = 3.0]"


def test_render_empty_premise(terminology):
    rule = Rule(premise=frozenset(), conclusion=5, count_premise=10.0, count_both=10.0)
    assert render_rule(rule, terminology) == (
        "IF (always) THEN post:someGold [p = 1.000, support = 10.0]"
    )


def test_render_orders_premise_by_feature_id(terminology):
    rule = Rule(premise=frozenset({3, 0}), conclusion=4, count_premise=2.0, count_both=1.0)
    text = render_rule(rule, terminology)
    assert text.startswith("IF pre:someRich AND act:withdraw THEN")


def test_render_unknown_feature(terminology):
    rule = Rule(premise=frozenset({99}), conclusion=4, count_premise=1.0, count_both=1.0)
    with pytest.raises(UnknownFeature):
        render_rule(rule, terminology)


def test_render_injective_over_distinct_rules(terminology):
    rules = [
        Rule(frozenset(), 4, 4.0, 2.0),
        Rule(frozenset({0}), 4, 4.0, 2.0),
        Rule(frozenset({1}), 4, 4.0, 2.0),
        Rule(frozenset({0, 1}), 4, 4.0, 2.0),
        Rule(frozenset({0}), 5, 4.0, 2.0),
    ]
    texts = {render_rule(r, terminology) for r in rules}
    assert len(texts) == len(rules)


def test_rendered_line_parses_back(terminology):
    rule = Rule(premise=frozenset({0, 3}), conclusion=4, count_premise=7.0, count_both=5.0)
    text = render_rule(rule, terminology)
    m = re.fullmatch(
        r"IF (?P<premise>.+) THEN (?P<conclusion>\S+) "
        r"\[p = (?P<p>\d\.\d{3}), support = (?P<s>\d+\.\d)\]",
        text,
    )
    assert m is not None
    names = m["premise"].split(" AND ")
    assert names == ["pre:someRich", "act:withdraw"]
    assert m["conclusion"] == "post:someRich"
    assert float(m["p"]) == pytest.approx(5 / 7, abs=5e-4)
