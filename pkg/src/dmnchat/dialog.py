"""Conversation sessions over an agent bundle.

A turn is: match the utterance against the intents eligible under the
active contexts, merge any extracted slot values, then either answer
the matched support intent or run the decide-or-ask loop: walk the
decision's inputs in declaration order, skip everything bound, ask the
first input that can still change the outcome, and when none can,
evaluate and present the result.
"""
from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, field

from . import nlu
from .botgen import (CANCEL, END, FALLBACK, HELP, SYS_NUMBER, WELCOME,
                     AgentBundle, derive_seed)
from .engine import evaluate_drd, format_value
from .errors import (MissingBinding, MultipleRulesMatched, NoRuleMatched,
                     SessionClosed, UnknownInput)
from .model import coerce_value, normalize_name
from .relevance import is_necessary, required_inputs

AWAITING_PREFIX = "awaiting_"


@dataclass(frozen=True)
class Response:
    text: str
    suggestions: tuple = ()
    help: str = None
    done: bool = False
    decision_value: object = None

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "suggestions": list(self.suggestions),
            "help": self.help,
            "done": self.done,
            "decision_value": self.decision_value,
        }


@dataclass
class Session:
    id: str
    bundle: AgentBundle
    active_decision: str = None
    collected: dict = field(default_factory=dict)
    contexts: dict = field(default_factory=dict)
    transcript: list = field(default_factory=list)
    status: str = "open"
    pending_input: str = None
    fallback_count: int = 0
    rng: random.Random = None

    def active_context_names(self):
        return {name for name, life in self.contexts.items() if life > 0}

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "active_decision": self.active_decision,
            "collected": {k: v for k, v in self.collected.items()},
            "summary": context_summary(self),
            "transcript": [{"role": r, "text": t} for r, t in self.transcript],
        }


def _decisions_text(bundle: AgentBundle) -> str:
    return ", ".join(i.display for i in bundle.decision_intents)


def _pool_text(session: Session, key: str) -> str:
    pool = session.bundle.responses.get(key) or ("...",)
    text = pool[0] if len(pool) == 1 else session.rng.choice(pool)
    return text.replace("{decisions}", _decisions_text(session.bundle))


def new_session(bundle: AgentBundle, session_id: str = None):
    sid = session_id or uuid.uuid4().hex
    session = Session(
        id=sid, bundle=bundle,
        rng=random.Random(derive_seed(bundle.seed, f"session:{sid}")),
    )
    text = _pool_text(session, WELCOME)
    response = Response(
        text=text,
        suggestions=tuple(i.display for i in bundle.decision_intents),
    )
    session.transcript.append(("bot", text))
    return session, response


def _entity_of(bundle: AgentBundle, input_name: str) -> str:
    for intent in bundle.intents:
        for p in intent.parameters:
            if p.name == input_name:
                return p.entity
    raise UnknownInput(input_name)


def suggestions_for(bundle: AgentBundle, input_name: str) -> tuple:
    name = normalize_name(input_name)
    entity_name = _entity_of(bundle, name)
    if entity_name == SYS_NUMBER:
        return ()
    entity = bundle.entity(entity_name)
    if entity.kind == "custom-boolean":
        return ("yes", "no")
    return tuple(str(e.value) for e in entity.entries)


def context_summary(session: Session) -> str:
    bundle = session.bundle
    parts = []
    if session.active_decision:
        display = bundle.intent(session.active_decision).display
        parts.append(f"Deciding: {display}.")
    if not session.collected:
        parts.append("No values provided yet.")
    else:
        pairs = ", ".join(
            f"{bundle.labels.get(k, k)} = {format_value(v)}"
            for k, v in session.collected.items())
        parts.append(f"You told me: {pairs}.")
    return " ".join(parts)


def _default_help(session: Session, input_name: str) -> str:
    bundle = session.bundle
    label = bundle.labels.get(input_name, input_name)
    entity_name = _entity_of(bundle, input_name)
    if entity_name == SYS_NUMBER:
        hint = _numeric_hint(bundle, input_name)
        return f"{label} expects a number{hint}."
    entity = bundle.entity(entity_name)
    if entity.kind == "custom-boolean":
        return f"{label} is a yes/no question. Answer yes or no."
    values = ", ".join(str(e.value) for e in entity.entries)
    return f"{label} must be one of: {values}."


def _numeric_hint(bundle: AgentBundle, input_name: str) -> str:
    from .errors import EmptyDomain
    from .relevance import domain_of

    try:
        probes = domain_of(bundle.model, input_name)
    except EmptyDomain:
        return ""
    return (f"; values from {format_value(probes[0])} to "
            f"{format_value(probes[-1])} cover every distinct case")


def help_response(session: Session, input_name: str = None) -> Response:
    bundle = session.bundle
    if input_name is None:
        text = _pool_text(session, HELP)
        return Response(text=text, help=text)
    name = normalize_name(input_name)
    if name not in bundle.labels:
        raise UnknownInput(name)
    text = bundle.help_texts.get(name) or _default_help(session, name)
    _reactivate_pending(session)
    return Response(text=text, suggestions=suggestions_for(bundle, name),
                    help=text)


def _activate(session: Session, name: str, lifespan: int):
    session.contexts[name] = max(session.contexts.get(name, 0), lifespan)


def _reactivate_pending(session: Session):
    if session.pending_input and session.active_decision:
        dt, i = session.active_decision, session.pending_input
        _activate(session, f"{dt}_decision", 5)
        _activate(session, f"{dt}_{i}", 1)
        _activate(session, f"{AWAITING_PREFIX}{i}", 1)


def _merge_slots(session: Session, slots: dict):
    model = session.bundle.model
    for name, value in slots.items():
        clauses = model.input_clauses_named(name)
        if clauses:
            try:
                value = coerce_value(value, clauses[0][1].type_ref)
            except ValueError:
                continue  # a number of the wrong shape; leave the slot open
        session.collected[name] = value


def _ask(session: Session, input_name: str) -> Response:
    bundle = session.bundle
    dt = session.active_decision
    session.pending_input = input_name
    _activate(session, f"{dt}_decision", 5)
    _activate(session, f"{dt}_{input_name}", 1)
    _activate(session, f"{AWAITING_PREFIX}{input_name}", 1)
    return Response(
        text=bundle.questions.get(input_name,
                                  f"What is the {input_name} value?"),
        suggestions=suggestions_for(bundle, input_name),
    )


def decide_or_ask(session: Session) -> Response:
    bundle = session.bundle
    model = bundle.model
    dt = session.active_decision
    required = bundle.caches.setdefault("required", {})
    if dt not in required:
        required[dt] = required_inputs(model, dt)
    nec_cache = bundle.caches.setdefault("necessity", {})

    for input_name in required[dt]:
        if input_name in session.collected:
            continue
        if is_necessary(model, dt, input_name, session.collected,
                        cache=nec_cache):
            return _ask(session, input_name)

    session.pending_input = None
    _activate(session, f"{dt}_decision", 5)
    try:
        result = evaluate_drd(model, dt, session.collected)
    except NoRuleMatched:
        return Response(
            text="I am sorry, no rule covers the values you gave me. "
                 + context_summary(session))
    except MissingBinding as exc:
        # every single input looked irrelevant, yet the table cannot pick
        # a unique rule without one of them; ask it anyway to make progress
        name = normalize_name(getattr(exc, "name", ""))
        if name in required[dt] and name not in session.collected:
            return _ask(session, name)
        return Response(
            text="I am missing something I cannot ask for. "
                 + context_summary(session))
    except MultipleRulesMatched as exc:
        return Response(
            text=f"The decision model is ambiguous here (rules "
                 f"{list(exc.numbers)} all apply). " + context_summary(session))

    session.status = "decided"
    value = result.value
    return Response(
        text=f"The result is: {format_value(value)}",
        done=True,
        decision_value=value,
    )


def handle_turn(session: Session, utterance: str) -> Response:
    if session.status == "cancelled":
        raise SessionClosed(f"session {session.id} is closed")
    bundle = session.bundle
    session.transcript.append(("user", utterance))

    active = session.active_context_names()
    match = nlu.match_intent(utterance, active, bundle)
    session.contexts = {n: life - 1 for n, life in session.contexts.items()
                        if life - 1 > 0}
    intent = bundle.intent(match.intent)
    for name, lifespan in intent.output_contexts:
        _activate(session, name, lifespan)

    if intent.name != FALLBACK:
        session.fallback_count = 0

    if intent.kind == "decision":
        if session.status == "decided":
            session.collected = {}
            session.status = "open"
        session.active_decision = intent.name
        _merge_slots(session, match.slots)
        response = decide_or_ask(session)
    elif intent.kind == "input":
        dt = intent.action.split(":", 1)[1]
        if session.status == "decided":
            response = Response(
                text="We already reached a result. Name a decision to "
                     "start over.")
        else:
            if session.active_decision is None:
                session.active_decision = dt
            _merge_slots(session, match.slots)
            response = decide_or_ask(session)
    elif intent.kind == "help":
        response = help_response(session, intent.action.split(":", 1)[1])
    elif intent.name == HELP:
        if session.pending_input and session.status == "open":
            response = help_response(session, session.pending_input)
        else:
            response = help_response(session)
    elif intent.name == WELCOME:
        response = Response(
            text=_pool_text(session, WELCOME),
            suggestions=tuple(i.display for i in bundle.decision_intents))
    elif intent.name == CANCEL:
        session.status = "cancelled"
        response = Response(text=_pool_text(session, CANCEL), done=True)
    elif intent.name == END:
        if session.status == "open":
            session.status = "cancelled"
        response = Response(text=_pool_text(session, END), done=True)
    else:  # fallback
        session.fallback_count += 1
        if session.pending_input and session.status == "open":
            if session.fallback_count >= 3:
                session.fallback_count = 0
                response = help_response(session, session.pending_input)
            else:
                question = bundle.questions.get(session.pending_input, "")
                response = Response(
                    text=_pool_text(session, FALLBACK) + " " + question
                         + " Say help if you are unsure.",
                    suggestions=suggestions_for(bundle, session.pending_input),
                )
                _reactivate_pending(session)
        else:
            response = Response(
                text=_pool_text(session, FALLBACK)
                     + f" You can ask for one of: {_decisions_text(bundle)}.")

    session.transcript.append(("bot", response.text))
    return response
