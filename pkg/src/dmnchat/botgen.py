"""Compile a decision model into a chatbot agent bundle.

The bundle is a pure function of (model, customization, seed): entities
extracted from the user-facing table columns, one decision intent per
table, one input intent and one help intent per collectable input, five
generic support intents, and seeded training phrases for all of them.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from . import phrasegen
from .dmn_xml import serialize_dmn
from .errors import CustomizationError, EmptyDomain
from .model import DmnModel, Source, normalize_name
from .relevance import domain_of, required_inputs

SYS_NUMBER = "sys_number"

WELCOME = "welcome"
FALLBACK = "fallback"
HELP = "help"
CANCEL = "cancel"
END = "end"
SUPPORT_INTENTS = (WELCOME, FALLBACK, HELP, CANCEL, END)

DECISION_CONTEXT_LIFESPAN = 5
AWAITING_CONTEXT_LIFESPAN = 1

_SUPPORT_PHRASES = {
    WELCOME: ("hi", "hello", "hey there", "good morning"),
    FALLBACK: (),
    HELP: ("help", "i need help", "what can i say",
           "how does this work", "what are my options"),
    CANCEL: ("cancel", "stop", "forget it", "never mind", "quit"),
    END: ("thanks, bye", "thank you", "bye", "goodbye", "thanks a lot"),
}

DEFAULT_RESPONSES = {
    WELCOME: ("Hello! I can help you with these decisions: {decisions}. "
              "Which one would you like to make?",),
    FALLBACK: ("Sorry, I did not understand that.",),
    HELP: ("You can ask me to make a decision, answer my questions, or say "
           "cancel to stop. Available decisions: {decisions}.",),
    CANCEL: ("Okay, I cancelled this conversation.",),
    END: ("You're welcome.", "Come back soon!"),
}


@dataclass(frozen=True)
class EntityEntry:
    value: object
    synonyms: tuple = ()


@dataclass(frozen=True)
class Entity:
    name: str
    kind: str  # system-number | custom-enum | custom-boolean
    entries: tuple = ()


@dataclass(frozen=True)
class Parameter:
    name: str
    entity: str
    required: bool = False
    label: str = ""


@dataclass(frozen=True)
class Intent:
    name: str
    kind: str  # decision | input | help | support
    display: str = ""
    parameters: tuple = ()
    input_contexts: tuple = ()
    output_contexts: tuple = ()  # of (context name, lifespan)
    training_phrases: tuple = ()
    action: str = ""

    @property
    def required_params(self):
        return tuple(p for p in self.parameters if p.required)


@dataclass(frozen=True)
class Customization:
    inputs: dict = field(default_factory=dict)
    responses: dict = field(default_factory=dict)

    @staticmethod
    def from_json(data: dict) -> "Customization":
        if not isinstance(data, dict):
            raise CustomizationError("customization must be a JSON object")
        unknown = set(data) - {"inputs", "responses"}
        if unknown:
            raise CustomizationError(f"unknown customization keys: {sorted(unknown)}")
        inputs = {}
        for name, section in (data.get("inputs") or {}).items():
            if not isinstance(section, dict):
                raise CustomizationError(f"input section {name!r} must be an object")
            bad = set(section) - {"question", "help", "synonyms"}
            if bad:
                raise CustomizationError(
                    f"unknown keys {sorted(bad)} under input {name!r}")
            inputs[normalize_name(name)] = {
                "question": section.get("question"),
                "help": section.get("help"),
                "synonyms": {str(k): tuple(v) for k, v in
                             (section.get("synonyms") or {}).items()},
            }
        responses = {}
        for name, pool in (data.get("responses") or {}).items():
            key = normalize_name(name)
            if key not in SUPPORT_INTENTS:
                raise CustomizationError(f"unknown response intent {name!r}")
            if not isinstance(pool, list) or not all(isinstance(t, str) for t in pool):
                raise CustomizationError(f"responses for {name!r} must be a string list")
            responses[key] = tuple(pool)
        return Customization(inputs=inputs, responses=responses)

    def to_json(self) -> dict:
        return {
            "inputs": {
                name: {k: (list(v) if isinstance(v, tuple) else
                           ({kk: list(vv) for kk, vv in v.items()}
                            if isinstance(v, dict) else v))
                       for k, v in section.items() if v}
                for name, section in sorted(self.inputs.items())
            },
            "responses": {k: list(v) for k, v in sorted(self.responses.items())},
        }


@dataclass(frozen=True)
class AgentBundle:
    model: DmnModel
    entities: tuple
    intents: tuple
    customization: Customization
    seed: int
    generated_at: str
    max_phrases: int = phrasegen.DEFAULT_MAX_PHRASES
    labels: dict = field(default_factory=dict)
    questions: dict = field(default_factory=dict)
    help_texts: dict = field(default_factory=dict)
    responses: dict = field(default_factory=dict)
    phrase_collisions: tuple = ()
    caches: dict = field(default_factory=dict, compare=False, repr=False)

    def intent(self, name: str):
        for it in self.intents:
            if it.name == name:
                return it
        raise KeyError(name)

    def entity(self, name: str):
        for e in self.entities:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def decision_intents(self):
        return tuple(i for i in self.intents if i.kind == "decision")


def derive_seed(seed: int, name: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{name}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _label_words(clause) -> str:
    label = clause.label.strip() or clause.expression
    return " ".join(label.lower().split())


def _string_constants(model: DmnModel, input_name: str) -> list:
    """Distinct quoted constants over every column bound by the name."""
    from .model import AnyOf, Eq, Not

    def collect(test, out):
        if isinstance(test, Eq) and test.value.type_ref == "string":
            out.append(str(test.value.raw))
        elif isinstance(test, AnyOf):
            for t in test.tests:
                collect(t, out)
        elif isinstance(test, Not):
            collect(test.test, out)

    raw = []
    for decision, clause in model.input_clauses_named(input_name):
        idx = next(i for i, c in enumerate(decision.table.inputs) if c is clause)
        for rule in decision.table.rules:
            collect(rule.input_entries[idx], raw)
    out = []
    for value in raw:
        if value.casefold() not in [v.casefold() for v in out]:
            out.append(value)
    return out


def _gen_entities(model: DmnModel):
    """Entities plus the input -> entity-name map and display labels."""
    entities = []
    mapping = {}
    labels = {}
    need_number = False
    for decision in model.decisions:
        for clause in decision.table.inputs:
            if clause.source is not Source.USER:
                continue
            name = clause.normalized_name
            if name in mapping:
                continue
            labels[name] = clause.label.strip() or clause.expression
            words = _label_words(clause)
            if clause.type_ref == "boolean":
                ent_name = f"ent_{clause.expression_name}_{decision.normalized_name}"
                entries = (
                    EntityEntry(True, ("yes", "ok", "correct", words, f"has {words}")),
                    EntityEntry(False, ("no", f"not {words}", f"without {words}")),
                )
                entities.append(Entity(ent_name, "custom-boolean", entries))
                mapping[name] = ent_name
            elif clause.type_ref == "string":
                constants = _string_constants(model, name)
                if not constants:
                    raise EmptyDomain(name)
                ent_name = f"ent_{clause.expression_name}"
                if any(e.name == ent_name for e in entities):
                    ent_name = f"ent_{clause.expression_name}_{decision.normalized_name}"
                entries = tuple(EntityEntry(v) for v in constants)
                entities.append(Entity(ent_name, "custom-enum", entries))
                mapping[name] = ent_name
            else:
                mapping[name] = SYS_NUMBER
                need_number = True
    if need_number:
        entities.append(Entity(SYS_NUMBER, "system-number", ()))
    return entities, mapping, labels


def gen_entities(model: DmnModel) -> list:
    return _gen_entities(model)[0]


def _params_for(model, decision_name, mapping, labels) -> tuple:
    return tuple(
        Parameter(name=i, entity=mapping.get(i, SYS_NUMBER),
                  required=False, label=labels.get(i, i))
        for i in required_inputs(model, decision_name)
    )


def _numeric_domains(model, params) -> dict:
    domains = {}
    for p in params:
        if p.entity == SYS_NUMBER:
            try:
                domains[p.name] = tuple(domain_of(model, p.name))
            except EmptyDomain:
                domains[p.name] = ()
    return domains


def _attach_phrases(intent, entities, domains, seed, max_phrases):
    if intent.kind == "decision":
        spec = phrasegen.build_decision_spec(intent, entities, domains)
    else:
        spec = phrasegen.build_input_spec(intent, entities, domains)
    phrases = phrasegen.expand(spec, derive_seed(seed, intent.name), max_phrases)
    return replace(intent, training_phrases=tuple(phrases))


def gen_decision_intent(model: DmnModel, decision: str, seed: int = 0,
                        max_phrases: int = phrasegen.DEFAULT_MAX_PHRASES):
    entities, mapping, labels = _gen_entities(model)
    dt = normalize_name(decision)
    params = _params_for(model, dt, mapping, labels)
    intent = Intent(
        name=dt,
        kind="decision",
        display=model.decision(dt).name,
        parameters=params,
        input_contexts=(),
        output_contexts=((f"{dt}_decision", DECISION_CONTEXT_LIFESPAN),),
        action=f"decide_or_ask:{dt}",
    )
    return _attach_phrases(intent, entities, _numeric_domains(model, params),
                           seed, max_phrases)


def gen_input_intents(model: DmnModel, decision: str, seed: int = 0,
                      max_phrases: int = phrasegen.DEFAULT_MAX_PHRASES) -> list:
    entities, mapping, labels = _gen_entities(model)
    dt = normalize_name(decision)
    params = _params_for(model, dt, mapping, labels)
    domains = _numeric_domains(model, params)
    out = []
    for p in params:
        own_params = tuple(replace(q, required=q.name == p.name) for q in params)
        intent = Intent(
            name=f"{dt}_{p.name}",
            kind="input",
            display=p.label,
            parameters=own_params,
            input_contexts=(f"{dt}_decision", f"{dt}_{p.name}"),
            output_contexts=((f"{dt}_decision", DECISION_CONTEXT_LIFESPAN),),
            action=f"decide_or_ask:{dt}",
        )
        out.append(_attach_phrases(intent, entities, domains, seed, max_phrases))
    return out


def gen_support_intents(model: DmnModel, seed: int = 0) -> list:
    """Five generic support intents plus one help intent per input intent."""
    _, mapping, labels = _gen_entities(model)
    out = []
    for name in SUPPORT_INTENTS:
        out.append(Intent(
            name=name,
            kind="support",
            display=name,
            training_phrases=tuple(
                phrasegen.TrainingPhrase(t) for t in _SUPPORT_PHRASES[name]),
            action=name,
        ))
    for decision in model.decisions:
        dt = decision.normalized_name
        for i in required_inputs(model, dt):
            label = " ".join(labels.get(i, i).lower().split())
            texts = (f"what is {label}", f"help with {label}",
                     f"what does {label} mean", f"explain {label}")
            out.append(Intent(
                name=f"{dt}_{i}_help",
                kind="help",
                display=labels.get(i, i),
                input_contexts=(f"{dt}_decision", f"{dt}_{i}"),
                output_contexts=((f"{dt}_decision", DECISION_CONTEXT_LIFESPAN),
                                 (f"{dt}_{i}", AWAITING_CONTEXT_LIFESPAN)),
                training_phrases=tuple(phrasegen.TrainingPhrase(t) for t in texts),
                action=f"help:{i}",
            ))
    return out


def _merge_synonyms(entities, mapping, customization):
    by_name = {e.name: e for e in entities}
    for input_name, section in customization.inputs.items():
        synonyms = section.get("synonyms") or {}
        if not synonyms:
            continue
        ent_name = mapping.get(input_name)
        entity = by_name.get(ent_name)
        if entity is None or entity.kind == "system-number":
            raise CustomizationError(
                f"synonyms are only allowed on string or boolean inputs, "
                f"not {input_name!r}")
        new_entries = []
        for entry in entity.entries:
            extra = ()
            for key, syns in synonyms.items():
                if _entry_matches(entry.value, key):
                    extra = tuple(s for s in syns if s not in entry.synonyms)
            new_entries.append(replace(entry, synonyms=entry.synonyms + extra))
        known = {str(e.value).casefold() for e in entity.entries}
        for key in synonyms:
            if not any(_entry_matches(e.value, key) for e in entity.entries):
                raise CustomizationError(
                    f"input {input_name!r} has no entry {key!r} "
                    f"(known: {sorted(known)})")
        by_name[ent_name] = replace(entity, entries=tuple(new_entries))
    return [by_name[e.name] for e in entities]


def _entry_matches(value, key: str) -> bool:
    if isinstance(value, bool):
        return key.casefold() in (("true", "yes") if value else ("false", "no"))
    return str(value).casefold() == key.casefold()


def _dedup_phrases(intents) -> tuple:
    """Drop phrases that repeat verbatim across intents eligible together.

    Co-candidacy: intents with no input contexts match everywhere, so
    their phrases must be globally unique; scoped intents only collide
    with intents sharing their exact context set.
    """
    collisions = []
    open_seen = {}
    scoped_seen = {}
    cleaned = []
    for intent in intents:
        ctx = frozenset(intent.input_contexts)
        kept = []
        for phrase in intent.training_phrases:
            key = phrase.text.casefold()
            clash = open_seen.get(key)
            if clash is None and ctx:
                clash = scoped_seen.get((ctx, key))
            if clash is not None and clash != intent.name:
                collisions.append((intent.name, clash, phrase.text))
                continue
            kept.append(phrase)
            if ctx:
                scoped_seen[(ctx, key)] = intent.name
            else:
                open_seen[key] = intent.name
        cleaned.append(replace(intent, training_phrases=tuple(kept)))
    return tuple(cleaned), tuple(collisions)


def _timestamp() -> str:
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


def assemble_agent(model: DmnModel, customization: Customization = None,
                   seed: int = 0,
                   max_phrases: int = phrasegen.DEFAULT_MAX_PHRASES,
                   generated_at: str = None) -> AgentBundle:
    customization = customization or Customization()
    entities, mapping, labels = _gen_entities(model)
    for input_name in customization.inputs:
        if input_name not in mapping:
            raise CustomizationError(f"unknown input {input_name!r}")
    entities = _merge_synonyms(entities, mapping, customization)

    intents = []
    for decision in model.decisions:
        dt = decision.normalized_name
        params = _params_for(model, dt, mapping, labels)
        domains = _numeric_domains(model, params)
        decision_intent = Intent(
            name=dt, kind="decision", display=decision.name, parameters=params,
            output_contexts=((f"{dt}_decision", DECISION_CONTEXT_LIFESPAN),),
            action=f"decide_or_ask:{dt}",
        )
        intents.append(_attach_phrases(decision_intent, entities, domains,
                                       seed, max_phrases))
        for p in params:
            own = tuple(replace(q, required=q.name == p.name) for q in params)
            input_intent = Intent(
                name=f"{dt}_{p.name}", kind="input", display=p.label,
                parameters=own,
                input_contexts=(f"{dt}_decision", f"{dt}_{p.name}"),
                output_contexts=((f"{dt}_decision", DECISION_CONTEXT_LIFESPAN),),
                action=f"decide_or_ask:{dt}",
            )
            intents.append(_attach_phrases(input_intent, entities, domains,
                                           seed, max_phrases))
    intents.extend(gen_support_intents(model, seed))
    intents, collisions = _dedup_phrases(intents)

    questions = {}
    help_texts = {}
    for name, label in labels.items():
        section = customization.inputs.get(name) or {}
        questions[name] = section.get("question") or f"What is the {label} value?"
        if section.get("help"):
            help_texts[name] = section["help"]
    responses = dict(DEFAULT_RESPONSES)
    responses.update(customization.responses)

    return AgentBundle(
        model=model,
        entities=tuple(entities),
        intents=tuple(intents),
        customization=customization,
        seed=seed,
        generated_at=generated_at or _timestamp(),
        max_phrases=max_phrases,
        labels=labels,
        questions=questions,
        help_texts=help_texts,
        responses=responses,
        phrase_collisions=collisions,
    )


def bundle_fingerprint(bundle: AgentBundle) -> str:
    payload = json.dumps(
        {"model": serialize_dmn(bundle.model),
         "customization": bundle.customization.to_json(),
         "seed": bundle.seed},
        sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Export / import

def _entity_json(entity: Entity) -> dict:
    return {
        "name": entity.name,
        "kind": entity.kind,
        "entries": [{"value": e.value, "synonyms": list(e.synonyms)}
                    for e in entity.entries],
    }


def _intent_json(intent: Intent) -> dict:
    return {
        "name": intent.name,
        "kind": intent.kind,
        "display": intent.display,
        "action": intent.action,
        "parameters": [{"name": p.name, "entity": p.entity,
                        "required": p.required, "label": p.label}
                       for p in intent.parameters],
        "input_contexts": list(intent.input_contexts),
        "output_contexts": [{"name": n, "lifespan": l}
                            for n, l in intent.output_contexts],
        "training_phrases": [
            {"text": ph.text,
             "spans": [{"start": s.start, "end": s.end, "param": s.param,
                        "entity": s.entity, "surface": s.surface}
                       for s in ph.spans]}
            for ph in intent.training_phrases],
    }


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def render_agent_files(bundle: AgentBundle) -> dict:
    """The export as a path -> text map; exports compare byte for byte."""
    files = {
        "agent.json": _dump({
            "schema": "dmn-agent/1",
            "name": bundle.model.name,
            "seed": bundle.seed,
            "max_phrases": bundle.max_phrases,
            "generated_at": bundle.generated_at,
            "fingerprint": bundle_fingerprint(bundle),
            "decisions": [
                {"intent": i.name, "display": i.display,
                 "required_inputs": [p.name for p in i.parameters]}
                for i in bundle.decision_intents],
            "labels": dict(sorted(bundle.labels.items())),
            "questions": dict(sorted(bundle.questions.items())),
            "help": dict(sorted(bundle.help_texts.items())),
            "responses": {k: list(v) for k, v in sorted(bundle.responses.items())},
            "customization": bundle.customization.to_json(),
        }),
        "model.dmn": serialize_dmn(bundle.model),
    }
    for entity in bundle.entities:
        if entity.kind == "system-number":
            continue  # builtin, nothing to declare
        files[f"entities/{entity.name}.json"] = _dump(_entity_json(entity))
    for intent in bundle.intents:
        files[f"intents/{intent.name}.json"] = _dump(_intent_json(intent))
    return files


def export_agent(bundle: AgentBundle, directory: str) -> list:
    """Write the bundle; returns the sorted relative paths written."""
    files = render_agent_files(bundle)
    for relpath, text in sorted(files.items()):
        path = os.path.join(directory, relpath)
        os.makedirs(os.path.dirname(path) or directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return sorted(files)


def import_agent(directory: str) -> AgentBundle:
    """Rebuild a bundle from an export; equal to the exported one."""
    with open(os.path.join(directory, "agent.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(os.path.join(directory, "model.dmn"), encoding="utf-8") as fh:
        dmn_text = fh.read()
    from .dmn_xml import parse_dmn

    model = parse_dmn(dmn_text)
    customization = Customization.from_json(meta.get("customization") or {})
    return assemble_agent(model, customization, seed=meta["seed"],
                          max_phrases=meta.get("max_phrases",
                                               phrasegen.DEFAULT_MAX_PHRASES),
                          generated_at=meta["generated_at"])
