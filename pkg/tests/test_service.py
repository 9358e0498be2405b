"""HTTP layer: agent lifecycle, sessions, error envelopes, persistence."""
import json
import os
import time

import pytest
from fastapi.testclient import TestClient

from conftest import fixture_text
from dmnchat.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=str(tmp_path), default_seed=42)
    return TestClient(app)


def make_agent(client, xml, **extra):
    r = client.post("/agents", json={"dmn": xml, "seed": 42, **extra})
    assert r.status_code == 201
    return r.json()


# ---------------------------------------------------------------- models

def test_post_models_ok(client, membership_xml):
    r = client.post("/models", json={"dmn": membership_xml})
    assert r.status_code == 200
    assert r.json() == {
        "ok": True,
        "name": "Membership",
        "main_decision": "membership",
        "decisions": ["membership"],
        "diagnostics": [],
        "overlaps": [],
    }


def test_post_models_rejects_bad_xml(client):
    r = client.post("/models", json={"dmn": "<not dmn"})
    assert r.status_code == 400
    body = r.json()
    assert body["code"] == "invalid_model"
    assert "not well-formed XML" in body["message"]


def test_post_models_reports_overlaps(client, membership_xml):
    # widening rule 1 from <18 to <=18 makes age 18 match twice
    bad = membership_xml.replace("&lt;18", "&lt;=18", 1)
    r = client.post("/models", json={"dmn": bad})
    assert r.status_code == 400
    body = r.json()
    assert body["code"] == "invalid_model"
    assert body["message"] == "the model has blocking problems"
    overlaps = body["details"]["overlaps"]
    assert len(overlaps) == 6
    assert overlaps[0] == {
        "decision": "membership",
        "rule_a": 1,
        "rule_b": 5,
        "witness": {"age": 18, "hired": False, "contribution": "none"},
    }
    assert all(ov["rule_a"] == 1 for ov in overlaps)
    assert body["details"]["diagnostics"] == []


def test_bad_request_bodies(client):
    r = client.post("/models", content=b"{oops",
                    headers={"content-type": "application/json"})
    assert (r.status_code, r.json()["code"]) == (400, "bad_request")
    assert r.json()["message"] == "request body must be JSON"

    r = client.post("/models", json=[1, 2])
    assert r.json()["message"] == "request body must be an object"

    r = client.post("/models", json={"dmn": "   "})
    assert r.json()["message"] == "field 'dmn' must be DMN XML text"


# ---------------------------------------------------------------- agents

def test_create_agent_summary(client, membership_xml):
    agent = make_agent(client, membership_xml)
    assert agent == {
        "agent_id": "2516d12296de5c13",
        "name": "Membership",
        "seed": 42,
        "created_at": "1970-01-01T00:00:00Z",
        "decisions": [{
            "intent": "membership",
            "display": "Membership",
            "required_inputs": ["age", "hired", "contribution"],
        }],
        "entities": 2,
        "intents": 12,
    }


def test_same_content_same_id(client, membership_xml):
    first = make_agent(client, membership_xml)
    second = make_agent(client, membership_xml)
    assert first["agent_id"] == second["agent_id"]
    listing = client.get("/agents").json()["agents"]
    assert [a["agent_id"] for a in listing] == [first["agent_id"]]


def test_list_and_get_agents(client, membership_xml):
    agent = make_agent(client, membership_xml)
    kpi = make_agent(client, fixture_text("kpi.dmn"))
    ids = [a["agent_id"] for a in client.get("/agents").json()["agents"]]
    assert ids == sorted([agent["agent_id"], kpi["agent_id"]])

    one = client.get(f"/agents/{agent['agent_id']}")
    assert one.status_code == 200
    assert one.json() == agent

    missing = client.get("/agents/nope")
    assert missing.status_code == 404
    assert missing.json() == {"code": "unknown_agent",
                              "message": "no agent 'nope'", "details": None}


def test_export_file_roster(client, membership_xml):
    agent = make_agent(client, membership_xml)
    files = client.get(f"/agents/{agent['agent_id']}/export").json()["files"]
    assert sorted(files) == [
        "agent.json",
        "entities/ent_contribution.json",
        "entities/ent_hired_membership.json",
        "intents/cancel.json",
        "intents/end.json",
        "intents/fallback.json",
        "intents/help.json",
        "intents/membership.json",
        "intents/membership_age.json",
        "intents/membership_age_help.json",
        "intents/membership_contribution.json",
        "intents/membership_contribution_help.json",
        "intents/membership_hired.json",
        "intents/membership_hired_help.json",
        "intents/welcome.json",
        "model.dmn",
    ]
    # the exported model is re-serialized, not the upload verbatim
    from dmnchat.dmn_xml import parse_dmn
    assert parse_dmn(files["model.dmn"]) == parse_dmn(membership_xml)


def test_customization_error_gives_422(client, membership_xml):
    r = client.post("/agents", json={
        "dmn": membership_xml,
        "customization": {"inputs": {"zzz": {}}}})
    assert r.status_code == 422
    assert r.json()["code"] == "customization_error"
    assert r.json()["message"] == "unknown input 'zzz'"


def test_customization_changes_agent_id(client, membership_xml):
    plain = make_agent(client, membership_xml)
    custom = make_agent(client, membership_xml, customization={
        "inputs": {"hired": {"question": "Are they on the payroll?"}}})
    assert custom["agent_id"] != plain["agent_id"]


# ---------------------------------------------------------------- sessions

def open_session(client, agent_id):
    r = client.post(f"/agents/{agent_id}/sessions")
    assert r.status_code == 201
    return r.json()


def test_conversation_over_http(client, membership_xml):
    agent = make_agent(client, membership_xml)
    opened = open_session(client, agent["agent_id"])
    assert opened["agent_id"] == agent["agent_id"]
    assert opened["response"] == {
        "text": "Hello! I can help you with these decisions: Membership. "
                "Which one would you like to make?",
        "suggestions": ["Membership"],
        "help": None,
        "done": False,
        "decision_value": None,
    }
    sid = opened["session_id"]

    def say(text):
        r = client.post(f"/sessions/{sid}/messages", json={"text": text})
        assert r.status_code == 200
        return r.json()

    turns = [say(t) for t in ["membership", "40", "no", "minimum"]]
    assert [t["response"]["text"] for t in turns] == [
        "What is the Age value?",
        "What is the Hired value?",
        "What is the Contribution value?",
        "The result is: conditionally accepted",
    ]
    assert turns[1]["response"]["suggestions"] == ["yes", "no"]
    assert turns[2]["response"]["suggestions"] == ["none", "minimum", "maximum"]
    assert [t["status"] for t in turns] == ["open", "open", "open", "decided"]
    final = turns[-1]["response"]
    assert final["done"] is True
    assert final["decision_value"] == "conditionally accepted"

    ctx = client.get(f"/sessions/{sid}/context").json()
    assert ctx["status"] == "decided"
    assert ctx["active_decision"] == "membership"
    assert ctx["collected"] == {"age": 40, "hired": False,
                                "contribution": "minimum"}
    assert ctx["summary"] == ("Deciding: Membership. You told me: Age = 40, "
                              "Hired = false, Contribution = minimum.")
    assert ctx["transcript"][0]["role"] == "bot"
    assert ctx["transcript"][1] == {"role": "user", "text": "membership"}
    assert ctx["transcript"][-1]["text"] == ("The result is: "
                                             "conditionally accepted")


def test_cancelled_session_gives_409(client, membership_xml):
    agent = make_agent(client, membership_xml)
    sid = open_session(client, agent["agent_id"])["session_id"]
    r = client.post(f"/sessions/{sid}/messages", json={"text": "cancel"})
    assert r.json()["status"] == "cancelled"
    assert r.json()["response"]["text"] == "Okay, I cancelled this conversation."

    r = client.post(f"/sessions/{sid}/messages", json={"text": "hello"})
    assert r.status_code == 409
    assert r.json()["code"] == "session_closed"
    assert sid in r.json()["message"]


def test_delete_session(client, membership_xml):
    agent = make_agent(client, membership_xml)
    sid = open_session(client, agent["agent_id"])["session_id"]
    r = client.delete(f"/sessions/{sid}")
    assert (r.status_code, r.json()) == (200, {"ok": True})
    r = client.get(f"/sessions/{sid}/context")
    assert (r.status_code, r.json()["code"]) == (404, "unknown_session")


def test_unknown_session_404(client):
    r = client.get("/sessions/nope/context")
    assert r.status_code == 404
    assert r.json() == {"code": "unknown_session",
                        "message": "no session 'nope'", "details": None}


def test_blank_message_rejected(client, membership_xml):
    agent = make_agent(client, membership_xml)
    sid = open_session(client, agent["agent_id"])["session_id"]
    r = client.post(f"/sessions/{sid}/messages", json={"text": "  "})
    assert (r.status_code, r.json()["message"]) == (
        400, "field 'text' must be a string")


def test_session_ttl_eviction(membership_xml):
    app = create_app(default_seed=42, session_ttl=0.01)
    client = TestClient(app)
    agent = make_agent(client, membership_xml)
    sid = open_session(client, agent["agent_id"])["session_id"]
    time.sleep(0.05)
    r = client.post(f"/sessions/{sid}/messages", json={"text": "membership"})
    assert (r.status_code, r.json()["code"]) == (404, "unknown_session")


def test_sessions_survive_within_ttl(membership_xml):
    app = create_app(default_seed=42, session_ttl=60.0)
    client = TestClient(app)
    agent = make_agent(client, membership_xml)
    sid = open_session(client, agent["agent_id"])["session_id"]
    r = client.post(f"/sessions/{sid}/messages", json={"text": "membership"})
    assert r.status_code == 200


# ------------------------------------------------------------ persistence

def test_restart_reloads_agents(tmp_path, membership_xml):
    first = TestClient(create_app(data_dir=str(tmp_path), default_seed=42))
    agent = make_agent(first, membership_xml)
    files = first.get(f"/agents/{agent['agent_id']}/export").json()["files"]

    reborn = TestClient(create_app(data_dir=str(tmp_path)))
    r = reborn.get(f"/agents/{agent['agent_id']}")
    assert r.status_code == 200
    assert r.json() == agent
    assert reborn.get(f"/agents/{agent['agent_id']}/export").json()["files"] \
        == files

    # a reloaded agent still converses
    sid = open_session(reborn, agent["agent_id"])["session_id"]
    r = reborn.post(f"/sessions/{sid}/messages", json={"text": "membership"})
    assert r.json()["response"]["text"] == "What is the Age value?"


def test_agent_dir_layout(tmp_path, membership_xml):
    client = TestClient(create_app(data_dir=str(tmp_path), default_seed=42))
    agent = make_agent(client, membership_xml)
    root = tmp_path / "agents" / agent["agent_id"]
    assert (root / "agent.json").is_file()
    assert (root / "model.dmn").is_file()
    assert (root / "source.dmn").read_text() == membership_xml
    assert json.loads((root / "customization.json").read_text()) == {}
    assert (root / "intents" / "membership.json").is_file()


def test_corrupt_agent_dir_is_skipped(tmp_path, membership_xml, caplog):
    client = TestClient(create_app(data_dir=str(tmp_path), default_seed=42))
    agent = make_agent(client, membership_xml)
    os.makedirs(tmp_path / "agents" / "garbage")
    (tmp_path / "agents" / "garbage" / "agent.json").write_text("{nope")

    with caplog.at_level("WARNING", logger="dmnchat.service"):
        reborn = TestClient(create_app(data_dir=str(tmp_path)))
    assert any("skipping agent garbage" in m for m in caplog.messages)
    ids = [a["agent_id"] for a in reborn.get("/agents").json()["agents"]]
    assert ids == [agent["agent_id"]]


def test_root_serves_fallback_page(client):
    r = client.get("/")
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/html")
    assert "running" in r.text


def test_root_serves_static_dir(tmp_path, membership_xml):
    static = tmp_path / "web"
    static.mkdir()
    (static / "index.html").write_text("<h1>custom chat</h1>")
    client = TestClient(create_app(static_dir=str(static)))
    r = client.get("/")
    assert r.status_code == 200
    assert "custom chat" in r.text
