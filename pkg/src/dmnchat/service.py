"""HTTP facade: upload models, generate agents, run chat sessions.

Agents persist as plain files under the data directory (the same layout
the exporter writes, plus the original source and customization), so a
restart reloads them; sessions are in-memory only and evicted after 30
minutes of silence.  Each session serializes its turns behind a lock;
the agent store itself is read-mostly.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import dialog
from .botgen import (AgentBundle, Customization, assemble_agent,
                     bundle_fingerprint, import_agent, render_agent_files)
from .dmn_xml import parse_dmn, validate_model
from .errors import CustomizationError, DmnError, SessionClosed
from .relevance import detect_overlaps

log = logging.getLogger("dmnchat.service")

SESSION_TTL_SECONDS = 30 * 60


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details
        super().__init__(message)


@dataclass
class AgentRecord:
    agent_id: str
    bundle: AgentBundle
    source: str
    customization: dict
    created_at: str


@dataclass
class LiveSession:
    session: dialog.Session
    agent_id: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = field(default_factory=time.monotonic)


def _diagnostics_json(diagnostics) -> list:
    return [{"code": d.code, "severity": d.severity, "message": d.message,
             "location": d.location()} for d in diagnostics]


def _overlaps_json(model) -> list:
    out = []
    for decision in model.decisions:
        for ov in detect_overlaps(decision.table):
            out.append({
                "decision": decision.normalized_name,
                "rule_a": ov.rule_a,
                "rule_b": ov.rule_b,
                "witness": {k: v for k, v in ov.witness.items()},
            })
    return out


def _check_model(dmn_text: str):
    """Parse and fully validate; raises ApiError with the report on failure."""
    try:
        model = parse_dmn(dmn_text)
    except DmnError as exc:
        raise ApiError(400, "invalid_model", str(exc))
    diagnostics = validate_model(model)
    errors = [d for d in diagnostics if d.severity == "error"]
    overlaps = []
    if not errors:
        try:
            overlaps = _overlaps_json(model)
        except DmnError as exc:
            raise ApiError(
                400, "invalid_model", str(exc),
                details={"diagnostics": _diagnostics_json(diagnostics),
                         "overlaps": []})
    if errors or overlaps:
        raise ApiError(400, "invalid_model", "the model has blocking problems",
                       details={"diagnostics": _diagnostics_json(diagnostics),
                                "overlaps": overlaps})
    return model, diagnostics


class AgentStore:
    def __init__(self, data_dir: str = None):
        self.data_dir = data_dir
        self._records = {}
        self._lock = threading.Lock()
        if data_dir:
            self._load_all()

    def _agents_dir(self) -> str:
        return os.path.join(self.data_dir, "agents")

    def _load_all(self):
        root = self._agents_dir()
        if not os.path.isdir(root):
            return
        for agent_id in sorted(os.listdir(root)):
            path = os.path.join(root, agent_id)
            try:
                bundle = import_agent(path)
                with open(os.path.join(path, "source.dmn"), encoding="utf-8") as fh:
                    source = fh.read()
                with open(os.path.join(path, "customization.json"),
                          encoding="utf-8") as fh:
                    customization = json.load(fh)
                with open(os.path.join(path, "agent.json"), encoding="utf-8") as fh:
                    created_at = json.load(fh)["generated_at"]
            except Exception as exc:  # a corrupt record must not sink startup
                log.warning("skipping agent %s: %s", agent_id, exc)
                continue
            self._records[agent_id] = AgentRecord(
                agent_id, bundle, source, customization, created_at)

    def add(self, record: AgentRecord):
        with self._lock:
            self._records[record.agent_id] = record
        if self.data_dir:
            path = os.path.join(self._agents_dir(), record.agent_id)
            os.makedirs(path, exist_ok=True)
            from .botgen import export_agent

            export_agent(record.bundle, path)
            with open(os.path.join(path, "source.dmn"), "w",
                      encoding="utf-8") as fh:
                fh.write(record.source)
            with open(os.path.join(path, "customization.json"), "w",
                      encoding="utf-8") as fh:
                json.dump(record.customization, fh, indent=2, sort_keys=True)
                fh.write("\n")

    def get(self, agent_id: str) -> AgentRecord:
        record = self._records.get(agent_id)
        if record is None:
            raise ApiError(404, "unknown_agent", f"no agent {agent_id!r}")
        return record

    def all(self) -> list:
        return [self._records[k] for k in sorted(self._records)]


class SessionStore:
    def __init__(self, ttl: float = SESSION_TTL_SECONDS):
        self.ttl = ttl
        self._sessions = {}
        self._lock = threading.Lock()

    def _evict(self):
        cutoff = time.monotonic() - self.ttl
        for sid in [s for s, live in self._sessions.items()
                    if live.last_used < cutoff]:
            del self._sessions[sid]

    def add(self, live: LiveSession) -> str:
        with self._lock:
            self._evict()
            self._sessions[live.session.id] = live
        return live.session.id

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            self._evict()
            live = self._sessions.get(session_id)
            if live is None:
                raise ApiError(404, "unknown_session", f"no session {session_id!r}")
            live.last_used = time.monotonic()
            return live

    def remove(self, session_id: str):
        with self._lock:
            self._sessions.pop(session_id, None)


def _agent_summary(record: AgentRecord) -> dict:
    bundle = record.bundle
    return {
        "agent_id": record.agent_id,
        "name": bundle.model.name,
        "seed": bundle.seed,
        "created_at": record.created_at,
        "decisions": [
            {"intent": i.name, "display": i.display,
             "required_inputs": [p.name for p in i.parameters]}
            for i in bundle.decision_intents],
        "entities": len([e for e in bundle.entities
                         if e.kind != "system-number"]),
        "intents": len(bundle.intents),
    }


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>dmnchat</title></head>
<body><h1>dmnchat service</h1>
<p>The service is running. The webchat assets are not installed;
use the JSON API or point --webchat-dir at a built frontend.</p>
</body></html>
"""


def create_app(data_dir: str = None, default_seed: int = 0,
               max_phrases: int = 500, static_dir: str = None,
               session_ttl: float = SESSION_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="dmnchat", docs_url=None, redoc_url=None)
    agents = AgentStore(data_dir)
    sessions = SessionStore(ttl=session_ttl)
    app.state.agents = agents
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message,
                     "details": exc.details})

    async def _json_body(request: Request) -> dict:
        try:
            data = await request.json()
        except Exception:
            raise ApiError(400, "bad_request", "request body must be JSON")
        if not isinstance(data, dict):
            raise ApiError(400, "bad_request", "request body must be an object")
        return data

    @app.post("/models")
    async def post_models(request: Request):
        data = await _json_body(request)
        dmn = data.get("dmn")
        if not isinstance(dmn, str) or not dmn.strip():
            raise ApiError(400, "bad_request", "field 'dmn' must be DMN XML text")
        model, diagnostics = _check_model(dmn)
        return {
            "ok": True,
            "name": model.name,
            "main_decision": model.main_decision,
            "decisions": sorted(d.normalized_name for d in model.decisions),
            "diagnostics": _diagnostics_json(diagnostics),
            "overlaps": [],
        }

    @app.post("/agents")
    async def post_agents(request: Request):
        data = await _json_body(request)
        dmn = data.get("dmn")
        if not isinstance(dmn, str) or not dmn.strip():
            raise ApiError(400, "bad_request", "field 'dmn' must be DMN XML text")
        model, _ = _check_model(dmn)
        customization_json = data.get("customization") or {}
        try:
            customization = Customization.from_json(customization_json)
            bundle = assemble_agent(
                model, customization,
                seed=int(data.get("seed", default_seed)),
                max_phrases=int(data.get("max_phrases", max_phrases)))
        except CustomizationError as exc:
            raise ApiError(422, "customization_error", str(exc))
        agent_id = bundle_fingerprint(bundle)
        record = AgentRecord(agent_id, bundle, dmn, customization_json,
                             bundle.generated_at)
        agents.add(record)
        return JSONResponse(status_code=201, content=_agent_summary(record))

    @app.get("/agents")
    async def list_agents():
        return {"agents": [_agent_summary(r) for r in agents.all()]}

    @app.get("/agents/{agent_id}")
    async def get_agent(agent_id: str):
        return _agent_summary(agents.get(agent_id))

    @app.get("/agents/{agent_id}/export")
    async def export_agent_route(agent_id: str):
        record = agents.get(agent_id)
        return {"files": render_agent_files(record.bundle)}

    @app.post("/agents/{agent_id}/sessions")
    async def new_session_route(agent_id: str):
        record = agents.get(agent_id)
        session, response = dialog.new_session(record.bundle,
                                               session_id=uuid.uuid4().hex)
        sessions.add(LiveSession(session=session, agent_id=agent_id))
        return JSONResponse(status_code=201, content={
            "session_id": session.id,
            "agent_id": agent_id,
            "response": response.to_json(),
        })

    @app.post("/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        data = await _json_body(request)
        text = data.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(400, "bad_request", "field 'text' must be a string")
        live = sessions.get(session_id)
        with live.lock:
            try:
                response = dialog.handle_turn(live.session, text)
            except SessionClosed:
                raise ApiError(409, "session_closed",
                               f"session {session_id!r} is closed")
        return {"session_id": session_id,
                "status": live.session.status,
                "response": response.to_json()}

    @app.get("/sessions/{session_id}/context")
    async def get_context(session_id: str):
        live = sessions.get(session_id)
        with live.lock:
            return live.session.to_json()

    @app.delete("/sessions/{session_id}")
    async def delete_session(session_id: str):
        live = sessions.get(session_id)
        with live.lock:
            live.session.status = "cancelled"
        sessions.remove(session_id)
        return {"ok": True}

    static = static_dir or os.path.join(os.path.dirname(__file__), "static")
    if os.path.isdir(static) and os.path.isfile(os.path.join(static, "index.html")):
        app.mount("/", StaticFiles(directory=static, html=True), name="webchat")
    else:
        @app.get("/", response_class=HTMLResponse)
        async def index():
            return _FALLBACK_PAGE

    return app
