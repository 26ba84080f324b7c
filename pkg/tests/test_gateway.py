"""Tool manifests and the HTTP gateway."""

from __future__ import annotations

import json

import httpx
import pytest

from worldkernel import (
    Role,
    act,
    build_kernel,
    export_tool_manifest,
    parse_scenario,
    serve,
)
from worldkernel.state import canonical_json

from worldgen import bank_scenario_doc


@pytest.fixture()
def scenario():
    return parse_scenario(bank_scenario_doc())


@pytest.fixture()
def gateway(scenario):
    kernel = build_kernel(scenario)
    handle = serve(kernel, "127.0.0.1:0")
    client = httpx.Client(base_url=handle.url, timeout=5.0)
    yield kernel, client
    client.close()
    handle.shutdown()


# -- manifest -----------------------------------------------------------------------

def test_manifest_empty_for_toolless_role(scenario):
    manifest = export_tool_manifest(scenario.schema, scenario.roles["auditor"])
    assert manifest == {"world": "toy-bank", "role": "auditor", "tools": []}


def test_manifest_lists_authorized_tools_alphabetically(scenario):
    role = Role(
        "cashier", frozenset({"Account"}), frozenset(), frozenset(), frozenset(),
        tools=frozenset({"withdraw", "deposit"}),
    )
    manifest = export_tool_manifest(scenario.schema, role)
    assert [t["name"] for t in manifest["tools"]] == ["deposit", "withdraw"]
    assert manifest["tools"][0]["guardText"] == "amount > 0"


def test_manifest_is_intersection_with_declared_actions(scenario):
    # direct Role construction can name tools the schema never declared;
    # the manifest carries exactly the declared intersection
    role = Role("odd", frozenset(), frozenset(), frozenset(), frozenset(),
                tools=frozenset({"deposit", "teleport"}))
    manifest = export_tool_manifest(scenario.schema, role)
    assert [t["name"] for t in manifest["tools"]] == ["deposit"]


def test_manifest_params_mirror_declarations(scenario):
    manifest = export_tool_manifest(scenario.schema, scenario.roles["teller"])
    by_name = {t["name"]: t for t in manifest["tools"]}
    assert set(by_name) == set(scenario.schema.actions)
    for name, entry in by_name.items():
        decl = scenario.schema.actions[name]
        assert entry["params"] == [
            {"name": p.name, "type": p.domain.render()} for p in decl.params
        ]
        assert entry["guardText"] == decl.guard_text
    assert by_name["promote"]["params"] == [{"name": "acct", "type": "ref(Account)"}]
    assert by_name["open_account"]["params"][0]["type"] == "string"


# -- endpoints ----------------------------------------------------------------------

def test_snapshot_endpoint_filters_by_role(gateway):
    kernel, client = gateway
    r = client.get("/snapshot", params={"agent": "audit1"})
    assert r.status_code == 200
    body = r.json()
    assert body["version"] == 0
    assert set(body["entities"]) == {"e1", "e2", "e3"}
    assert set(body["entities"]["e1"]["attrs"]) == {"owner", "balance"}


def test_rules_endpoint(gateway):
    kernel, client = gateway
    act(kernel, "teller1", "deposit", {"acct": "e1", "amount": 60})
    act(kernel, "teller1", "deposit", {"acct": "e1", "amount": 60})
    r = client.get("/rules", params={"agent": "teller1"})
    assert r.status_code == 200
    body = r.json()
    assert body["version"] == 2
    assert len(body["rules"]) == len(body["rendered"])
    assert any(rule["conclusion"] == "post:someRich" for rule in body["rules"])


def test_manifest_endpoint_and_unknown_role(gateway):
    _, client = gateway
    r = client.get("/manifest", params={"role": "teller"})
    assert r.status_code == 200
    assert r.json()["world"] == "toy-bank"
    r = client.get("/manifest", params={"role": "nobody"})
    assert r.status_code == 404
    assert r.json()["error"]["class"] == "UnknownRole"


def test_act_endpoint_commits_and_version_advances(gateway):
    kernel, client = gateway
    r = client.post("/act", json={"agent": "teller1", "tool": "deposit",
                                   "args": {"acct": "e2", "amount": 5}})
    assert r.status_code == 200
    assert r.json() == {"committed": True, "version": 1}
    snap = client.get("/snapshot", params={"agent": "teller1"}).json()
    assert snap["version"] == 1
    assert snap["entities"]["e2"]["attrs"]["balance"] == 15


def test_act_unauthorized_is_403_and_state_unchanged(gateway):
    kernel, client = gateway
    before = kernel.state_hash()
    r = client.post("/act", json={"agent": "audit1", "tool": "deposit",
                                   "args": {"acct": "e2", "amount": 5}})
    assert r.status_code == 403
    assert r.json()["error"]["class"] == "Unauthorized"
    assert kernel.state_hash() == before
    assert client.get("/snapshot", params={"agent": "audit1"}).json()["version"] == 0


def test_act_norm_rejections_are_409(gateway):
    _, client = gateway
    r = client.post("/act", json={"agent": "teller1", "tool": "withdraw",
                                   "args": {"acct": "e3", "amount": 5}})
    assert r.status_code == 409
    assert r.json()["error"]["class"] == "ConstraintViolation"
    r = client.post("/act", json={"agent": "teller1", "tool": "withdraw",
                                   "args": {"acct": "e1", "amount": 0}})
    assert r.status_code == 409
    assert r.json()["error"]["class"] == "GuardViolation"


def test_act_bad_arguments_are_400(gateway):
    _, client = gateway
    r = client.post("/act", json={"agent": "teller1", "tool": "deposit",
                                   "args": {"acct": "e1"}})
    assert r.status_code == 400
    assert r.json()["error"]["class"] == "ArgTypeError"


def test_unknown_agent_404(gateway):
    _, client = gateway
    r = client.get("/snapshot", params={"agent": "ghost"})
    assert r.status_code == 404
    assert r.json()["error"]["class"] == "UnknownAgent"
    r = client.post("/act", json={"agent": "ghost", "tool": "deposit", "args": {}})
    assert r.status_code == 404


def test_malformed_body_and_missing_params_are_400(gateway):
    _, client = gateway
    r = client.post("/act", content=b"{not json", headers={"Content-Type": "application/json"})
    assert r.status_code == 400
    assert r.json()["error"]["class"] == "BadRequest"
    r = client.post("/act", json={"tool": "deposit"})
    assert r.status_code == 400
    r = client.get("/snapshot")
    assert r.status_code == 400
    r = client.get("/nowhere")
    assert r.status_code == 404


def test_every_response_carries_version(gateway):
    kernel, client = gateway
    act(kernel, "teller1", "deposit", {"acct": "e1", "amount": 2})
    responses = [
        client.get("/snapshot", params={"agent": "teller1"}),
        client.get("/rules", params={"agent": "audit1"}),
        client.get("/manifest", params={"role": "auditor"}),
        client.post("/act", json={"agent": "audit1", "tool": "deposit", "args": {}}),
        client.get("/snapshot", params={"agent": "ghost"}),
    ]
    for r in responses:
        assert r.json()["version"] == 1


# -- differential: gateway vs in-process ----------------------------------------------

SCRIPT = [
    ("teller1", "deposit", {"acct": "e1", "amount": 60}),
    ("teller1", "deposit", {"acct": "e1", "amount": 60}),
    ("teller1", "promote", {"acct": "e1"}),
    ("audit1", "withdraw", {"acct": "e1", "amount": 5}),      # unauthorized
    ("teller1", "withdraw", {"acct": "e3", "amount": 5}),      # overdraw
    ("teller1", "withdraw", {"acct": "e1", "amount": 0}),      # guard
    ("teller1", "transfer", {"src": "e1", "dst": "e2", "amount": 30}),
    ("teller1", "befriend", {"a": "e2", "b": "e3"}),
    ("teller1", "open_account", {"owner": "dora", "start": 5}),
    ("teller1", "deposit", {"acct": "e4", "amount": 9}),
    ("teller1", "deposit", {"acct": "e4", "amount": "nine"}),  # bad arg
    ("teller1", "unfriend", {"a": "e2", "b": "e3"}),
]


def test_gateway_matches_in_process_execution(gateway):
    http_kernel, client = gateway
    for agent, tool, args in SCRIPT:
        client.post("/act", json={"agent": agent, "tool": tool, "args": args})

    local_kernel = build_kernel(parse_scenario(bank_scenario_doc()))
    local_results = [act(local_kernel, agent, tool, args) for agent, tool, args in SCRIPT]

    assert http_kernel.state_hash() == local_kernel.state_hash()
    http_log = [canonical_json(e) for e in http_kernel.log_entries]
    local_log = [canonical_json(e) for e in local_kernel.log_entries]
    assert http_log == local_log
    assert any(not r.committed for r in local_results)
