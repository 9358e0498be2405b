"""Training phrase generation from per-intent specs.

A spec is a list of patterns built from four segment kinds: fixed text,
an alias (named set of alternative wordings, optionally skippable), a
slot (a parameter position filled from a value pool), and a parameter
block that expands into sampled orderings of several slots.  Rendered
as text the segments read `~[name?]` for an optional alias, `@[param]`
for a slot and `#[...]` for the block, so a spec can be audited without
running the generator.

Expansion is seed-driven and bounded: every skeleton (pattern x alias
choice x slot ordering) contributes at least one phrase, value
combinations beyond the per-skeleton budget are dropped by uniform
sampling, and the final list is cut at max_phrases.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .errors import SpecError


@dataclass(frozen=True)
class Text:
    text: str


@dataclass(frozen=True)
class Alias:
    name: str
    optional: bool = False


@dataclass(frozen=True)
class Slot:
    param: str
    entity: str
    optional: bool = False


@dataclass(frozen=True)
class ParamSet:
    """A sampled-permutation block over several slots."""
    slots: tuple
    optional: bool = True


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    param: str
    entity: str
    surface: str


@dataclass(frozen=True)
class TrainingPhrase:
    text: str
    spans: tuple = ()


@dataclass(frozen=True)
class GenSpec:
    intent: str
    patterns: tuple
    alias_defs: dict = field(default_factory=dict)
    pools: dict = field(default_factory=dict)


DEFAULT_MAX_PHRASES = 500

_INIT_WORDINGS = (
    "i want to determine the",
    "what is the",
    "i would like to know the",
    "help me decide the",
)
_LEAD_WORDINGS = ("a value of",)


def kperm_sample(slots, seed) -> list:
    """Slot orderings used to vary parameter position in phrases.

    For three or fewer slots every k-permutation (k = 1..n) is returned.
    Beyond that the full product is useless as training data, so the
    result is all singletons, exactly one full-length ordering and a
    seeded sample of min(2n, available) partial orderings.
    """
    slots = list(slots)
    n = len(slots)
    if n == 0:
        raise ValueError("kperm_sample needs at least one slot")
    if n <= 3:
        out = []
        for k in range(1, n + 1):
            out.extend(itertools.permutations(slots, k))
        return out
    rng = random.Random(seed)
    out = [(s,) for s in slots]
    full = list(slots)
    rng.shuffle(full)
    out.append(tuple(full))
    partial = []
    for k in range(2, n):
        partial.extend(itertools.permutations(slots, k))
    out.extend(rng.sample(partial, min(2 * n, len(partial))))
    return out


def _bool_pool(entity, shareable: bool) -> tuple:
    """Surfaces for a boolean slot.

    yes/no/true/false are shared across every boolean entity, so they are
    only safe where extraction can still resolve them: on an intent's
    single boolean parameter, or on its required one (required slots are
    filled first).  Everywhere else the name-derived synonyms keep the
    generated spans unambiguous.
    """
    by_value = {bool(e.value): e for e in entity.entries}
    named_true = [s for s in by_value[True].synonyms if s not in ("yes", "ok", "correct")]
    named_false = [s for s in by_value[False].synonyms if s != "no"]
    named = (named_true[0] if named_true else "yes",
             named_false[-1] if named_false else "no")
    if shareable:
        return ("true", "false", "yes", "no") + named
    return named


def _enum_pool(entity) -> tuple:
    return tuple(str(e.value) for e in entity.entries)


def _number_pool(domain) -> tuple:
    if not domain:
        return ("1",)
    picks = {domain[0], domain[len(domain) // 2], domain[-1]}

    def fmt(v):
        if isinstance(v, float) and v.is_integer():
            return str(int(v))
        return str(v)

    return tuple(fmt(v) for v in sorted(picks))


def _pools_for(intent, entities, domains) -> dict:
    index = {e.name: e for e in entities}
    n_bool = sum(1 for p in intent.parameters
                 if index.get(p.entity) is not None
                 and index[p.entity].kind == "custom-boolean")
    pools = {}
    for p in intent.parameters:
        ent = index.get(p.entity)
        if ent is None or ent.kind == "system-number":
            pools[p.name] = _number_pool(domains.get(p.name, ()))
        elif ent.kind == "custom-boolean":
            pools[p.name] = _bool_pool(ent, shareable=n_bool == 1 or p.required)
        else:
            pools[p.name] = _enum_pool(ent)
    return pools


def build_decision_spec(intent, entities, domains) -> GenSpec:
    """Pattern family: [init?] <decision name> [with parameters?]."""
    pools = _pools_for(intent, entities, domains)
    slots = tuple(Slot(p.name, p.entity) for p in intent.parameters)
    pattern = [Alias("init", optional=True), Alias("name")]
    if slots:
        pattern.append(ParamSet(slots, optional=True))
    return GenSpec(
        intent=intent.name,
        patterns=(tuple(pattern),),
        alias_defs={"init": _INIT_WORDINGS, "name": (intent.display.lower(),)},
        pools=pools,
    )


def build_input_spec(intent, entities, domains=None) -> GenSpec:
    """Pattern family: bare value; "equals to" wording; value plus one extra."""
    pools = _pools_for(intent, entities, domains or {})
    own = next(p for p in intent.parameters if p.required)
    own_slot = Slot(own.name, own.entity)
    patterns = [
        (own_slot,),
        (Alias("lead", optional=True), Alias("name", optional=True),
         Text("equals to"), own_slot),
    ]
    for p in intent.parameters:
        if p.required:
            continue
        patterns.append((own_slot, Text("with"), Slot(p.name, p.entity)))
    return GenSpec(
        intent=intent.name,
        patterns=tuple(patterns),
        alias_defs={"lead": _LEAD_WORDINGS, "name": (own.label.lower(),)},
        pools=pools,
    )


def _skeletons(spec: GenSpec, seed) -> list:
    """Resolve every pattern into concrete (text | slot) item sequences."""
    done = []
    for pattern in spec.patterns:
        variants = [[]]
        for seg in pattern:
            if isinstance(seg, Text):
                variants = [v + [("text", seg.text)] for v in variants]
            elif isinstance(seg, Alias):
                if seg.name not in spec.alias_defs:
                    raise SpecError(f"alias {seg.name!r} is not defined")
                alts = [[("text", a)] for a in spec.alias_defs[seg.name]]
                if seg.optional:
                    alts.append([])
                variants = [v + a for v in variants for a in alts]
            elif isinstance(seg, Slot):
                tails = [[("slot", seg)]]
                if seg.optional:
                    tails.append([])
                variants = [v + t for v in variants for t in tails]
            elif isinstance(seg, ParamSet):
                tails = []
                if seg.optional:
                    tails.append([])
                for ordering in kperm_sample(seg.slots, seed):
                    items = [("text", "with")]
                    for i, slot in enumerate(ordering):
                        if i:
                            items.append(("text", "and"))
                        items.append(("slot", slot))
                    tails.append(items)
                variants = [v + t for v in variants for t in tails]
            else:
                raise SpecError(f"unknown segment {seg!r}")
        done.extend(v for v in variants if v)
    return done


def _unrank(index: int, sizes: list) -> list:
    digits = []
    for size in reversed(sizes):
        digits.append(index % size)
        index //= size
    return list(reversed(digits))


def _render(skeleton, choice, pools) -> TrainingPhrase:
    pieces = []
    slot_i = 0
    for kind, payload in skeleton:
        if kind == "text":
            pieces.append((payload, None))
        else:
            surface = pools[payload.param][choice[slot_i]]
            slot_i += 1
            pieces.append((surface, payload))
    text = ""
    spans = []
    for piece, slot in pieces:
        if text:
            text += " "
        start = len(text)
        text += piece
        if slot is not None:
            spans.append(Span(start, len(text), slot.param, slot.entity, piece))
    return TrainingPhrase(text=text, spans=tuple(spans))


def expand(spec: GenSpec, seed, max_phrases: int = DEFAULT_MAX_PHRASES) -> list:
    """Generate annotated phrases; deterministic in (spec, seed)."""
    if max_phrases < 1:
        raise ValueError("max_phrases must be at least 1")
    rng = random.Random(seed)
    skeletons = _skeletons(spec, seed)
    budget = max(1, max_phrases // max(1, len(skeletons)))

    per_skeleton = []
    for skeleton in skeletons:
        slots = [payload for kind, payload in skeleton if kind == "slot"]
        for slot in slots:
            if slot.param not in spec.pools:
                raise SpecError(f"no value pool for parameter {slot.param!r}")
        sizes = [len(spec.pools[s.param]) for s in slots]
        total = 1
        for size in sizes:
            total *= size
        if total <= budget:
            indices = range(total)
        else:
            indices = sorted(rng.sample(range(total), budget))
        phrases = []
        for idx in indices:
            choice = _unrank(idx, sizes) if slots else []
            phrases.append(_render(skeleton, choice, spec.pools))
        per_skeleton.append(phrases)

    out = []
    seen = set()
    for batch in itertools.zip_longest(*per_skeleton):
        for phrase in batch:
            if phrase is None:
                continue
            key = phrase.text.casefold()
            if key in seen:
                continue
            seen.add(key)
            out.append(phrase)
            if len(out) >= max_phrases:
                return out
    return out


def render_spec(spec: GenSpec) -> str:
    """The human-auditable DSL form of a spec."""
    lines = []
    for pattern in spec.patterns:
        parts = []
        for seg in pattern:
            if isinstance(seg, Text):
                parts.append(seg.text)
            elif isinstance(seg, Alias):
                parts.append(f"~[{seg.name}?]" if seg.optional else f"~[{seg.name}]")
            elif isinstance(seg, Slot):
                parts.append(f"@[{seg.param}?]" if seg.optional else f"@[{seg.param}]")
            elif isinstance(seg, ParamSet):
                inner = " ".join(f"@[{s.param}]" for s in seg.slots)
                parts.append(f"#[{inner}]")
        lines.append(" ".join(parts))
    for name, alts in sorted(spec.alias_defs.items()):
        lines.append(f"~{name}: " + " | ".join(alts))
    return "\n".join(lines) + "\n"
