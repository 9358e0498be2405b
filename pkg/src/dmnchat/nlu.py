"""Deterministic understanding layer: entities, slots, intent choice.

No trained model sits behind this; matching is longest-surface entity
spotting plus a two-part score over each eligible intent: how much of
the spotted material the intent's parameters can absorb (weight 0.6)
and the best token-set overlap with its training phrases (weight 0.4).
An utterance whose token set equals one of an intent's phrases is that
intent's, before any scoring.  Everything is a pure function of
(text, contexts, bundle).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .botgen import FALLBACK, SYS_NUMBER, AgentBundle

FILL_WEIGHT = 0.6
OVERLAP_WEIGHT = 0.4
FALLBACK_THRESHOLD = 0.30

_WORD = re.compile(r"[0-9a-z]+", re.IGNORECASE)
_NUMBER = re.compile(r"(?<![0-9a-z])-?\d+(?:\.\d+)?(?![0-9a-z])", re.IGNORECASE)


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    surface: str
    readings: tuple  # of (entity name, reference value); ambiguous surfaces
                     # such as "yes" carry one reading per boolean entity

    @property
    def entity(self):
        return self.readings[0][0]

    @property
    def value(self):
        return self.readings[0][1]


@dataclass(frozen=True)
class Match:
    intent: str
    score: float
    slots: dict = field(default_factory=dict)
    residual: int = 0


def tokenize(text: str) -> list:
    return [t.casefold() for t in _WORD.findall(text)]


def _classed(tokens) -> frozenset:
    # all-digit tokens count as one equivalence class so that any number
    # in an utterance overlaps the sampled numbers in training phrases
    return frozenset("0" if t.lstrip("-").isdigit() else t for t in tokens)


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _surface_table(entities) -> list:
    """(lowered surface, entity, value) triples, synonyms included."""
    out = []
    for entity in entities:
        if entity.kind == "system-number":
            continue
        for entry in entity.entries:
            if isinstance(entry.value, bool):
                surfaces = ["true" if entry.value else "false"]
            else:
                surfaces = [str(entry.value)]
            surfaces.extend(entry.synonyms)
            for s in surfaces:
                s = s.strip().casefold()
                if s:
                    out.append((s, entity.name, entry.value))
    return out


def _word_bounded(text: str, start: int, end: int) -> bool:
    before = text[start - 1] if start > 0 else " "
    after = text[end] if end < len(text) else " "
    return not before.isalnum() and not after.isalnum()


def spot_entities(text: str, entities) -> list:
    """Case-insensitive longest-match spotting, left to right, no overlaps."""
    lowered = text.casefold()
    hits = {}
    for surface, entity, value in _surface_table(entities):
        at = 0
        while True:
            pos = lowered.find(surface, at)
            if pos < 0:
                break
            end = pos + len(surface)
            if _word_bounded(lowered, pos, end):
                hits.setdefault((pos, end), []).append((entity, value))
            at = pos + 1
    for m in _NUMBER.finditer(text):
        raw = m.group()
        value = float(raw) if "." in raw else int(raw)
        hits.setdefault((m.start(), m.end()), []).append((SYS_NUMBER, value))

    taken = []
    covered = []
    for (start, end), readings in sorted(
            hits.items(), key=lambda kv: (kv[0][0] - kv[0][1], kv[0][0])):
        if any(start < c_end and end > c_start for c_start, c_end in covered):
            continue
        covered.append((start, end))
        deduped = []
        for r in readings:
            if r not in deduped:
                deduped.append(r)
        taken.append(EntitySpan(start, end, text[start:end], tuple(deduped)))
    return sorted(taken, key=lambda s: s.start)


def _assign(intent, spans, labels=None):
    """Slot assignment; returns (slots, spans absorbed, required fills).

    A span whose surface is just an input's name ("multilevel") is the
    weakest kind of evidence: it affirms the input when nothing else in
    the utterance values it, but in "multilevel equals to no" the name
    is only the topic.  So bare-name spans are placed last and never
    displace a value an explicit span already provided.
    """
    labels = labels or {}
    params = list(intent.parameters)
    order = {p.name: i for i, p in enumerate(params)}
    filled = {}
    absorbed = 0

    def rank(p):
        return (not p.required, order[p.name])

    def candidates_for(span):
        return sorted(
            ((p, value) for entity, value in span.readings
             for p in params if p.entity == entity),
            key=lambda c: rank(c[0]))

    def place(span, bare):
        nonlocal absorbed
        candidates = candidates_for(span)
        if not candidates:
            return
        unfilled = [c for c in candidates if c[0].name not in filled]
        if unfilled or not bare:
            param, value = (unfilled or candidates)[0]
            filled[param.name] = value
        absorbed += 1

    explicit, ambiguous, bare = [], [], []
    for span in spans:
        surface = span.surface.casefold()
        if all(surface in labels.get(entity, ())
               for entity, _ in span.readings):
            bare.append(span)
        elif len(span.readings) == 1:
            explicit.append(span)
        else:
            ambiguous.append(span)
    for span in explicit + ambiguous + bare:
        place(span, bare=span in bare)

    required_fills = sum(1 for p in params if p.required and p.name in filled)
    return filled, absorbed, required_fills


def extract_slots(intent, spans, labels=None) -> dict:
    return _assign(intent, spans, labels)[0]


def _phrase_token_sets(bundle: AgentBundle) -> dict:
    cache = bundle.caches.setdefault("phrase_tokens", {})
    if not cache:
        for intent in bundle.intents:
            cache[intent.name] = tuple(
                _classed(tokenize(p.text)) for p in intent.training_phrases)
    return cache


def _entity_labels(bundle: AgentBundle) -> dict:
    cache = bundle.caches.setdefault("entity_labels", {})
    if not cache:
        for intent in bundle.intents:
            for p in intent.parameters:
                if p.label:
                    cache.setdefault(p.entity, set()).add(p.label.casefold())
    return cache


def match_intent(text: str, active_contexts, bundle: AgentBundle) -> Match:
    active = set(active_contexts)
    spans = spot_entities(text, bundle.entities)
    labels = _entity_labels(bundle)
    tokens = tokenize(text)
    classed = _classed(tokens)
    phrase_tokens = _phrase_token_sets(bundle)

    scored = []
    for intent in bundle.intents:
        if intent.name == FALLBACK:
            continue
        if not set(intent.input_contexts) <= active:
            continue
        slots, absorbed, required_fills = _assign(intent, spans, labels)
        fill = absorbed / len(spans) if spans else 0.0
        overlap = max((_jaccard(classed, pt) for pt in phrase_tokens[intent.name]),
                      default=0.0)
        # an utterance that IS one of the intent's phrases (same token set)
        # belongs to it outright; cross-intent dedup keeps such phrases
        # unique among co-candidates, so this cannot flap between intents
        exact = classed and any(pt == classed
                                for pt in phrase_tokens[intent.name])
        score = FILL_WEIGHT * fill + OVERLAP_WEIGHT * overlap
        scored.append((0 if exact else 1, -score, -required_fills,
                       intent.name, score, slots))

    if not scored:
        return Match(intent=FALLBACK, score=0.0, residual=len(tokens))
    scored.sort(key=lambda row: row[:4])
    first = scored[0]
    name, score, slots = first[3], first[4], first[5]
    exact_winner = first[0] == 0

    span_chars = [(s.start, s.end) for s in spans]
    residual = 0
    for token in _WORD.finditer(text):
        if not any(token.start() >= a and token.end() <= b for a, b in span_chars):
            residual += 1

    if score < FALLBACK_THRESHOLD and not exact_winner:
        return Match(intent=FALLBACK, score=score, residual=residual)
    return Match(intent=name, score=score, slots=slots, residual=residual)
