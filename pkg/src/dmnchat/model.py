"""Typed representation of the DMN subset this package understands.

A model is a set of decisions (each backed by a single decision table with
hit policy UNIQUE), a set of named literal expressions, and the requirement
edges between them.  Everything is immutable so models can be shared freely
between the engine, the relevance analyzer and generated agents.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union


_ALNUM = re.compile(r"[^0-9a-z]+")

NUMERIC_TYPES = ("integer", "long", "double")
SCALAR_TYPES = ("string", "boolean") + NUMERIC_TYPES


def normalize_name(label: str) -> str:
    """Lowercase a display label and strip every non-alphanumeric character."""
    return _ALNUM.sub("", label.lower())


class Source(str, Enum):
    USER = "user"
    DECISION = "decision-output"
    LITERAL = "literal-output"


@dataclass(frozen=True)
class Value:
    """A typed scalar: the declared type plus its Python payload."""

    type_ref: str
    raw: Union[str, bool, int, float]

    def __post_init__(self):
        if self.type_ref not in SCALAR_TYPES:
            raise ValueError(f"unsupported type_ref {self.type_ref!r}")

    @property
    def is_numeric(self) -> bool:
        return self.type_ref in NUMERIC_TYPES


def coerce_value(raw, type_ref: str):
    """Coerce a Python value to the payload shape for ``type_ref``.

    Raises ValueError when the value cannot represent the declared type,
    e.g. a fractional number for an integer column.
    """
    if type_ref == "string":
        if isinstance(raw, str):
            return raw
        raise ValueError(f"expected string, got {raw!r}")
    if type_ref == "boolean":
        if isinstance(raw, bool):
            return raw
        raise ValueError(f"expected boolean, got {raw!r}")
    if type_ref in ("integer", "long"):
        if isinstance(raw, bool):
            raise ValueError(f"expected {type_ref}, got {raw!r}")
        if isinstance(raw, int):
            return raw
        if isinstance(raw, float) and raw.is_integer():
            return int(raw)
        raise ValueError(f"expected {type_ref}, got {raw!r}")
    if type_ref == "double":
        if isinstance(raw, bool):
            raise ValueError(f"expected double, got {raw!r}")
        if isinstance(raw, (int, float)):
            return float(raw)
        raise ValueError(f"expected double, got {raw!r}")
    raise ValueError(f"unsupported type_ref {type_ref!r}")


def values_equal(a, b, type_ref: str) -> bool:
    """Compare two payloads under the column's type.

    Strings compare case-insensitively after trimming; doubles within 1e-9.
    """
    if type_ref == "string":
        return str(a).strip().casefold() == str(b).strip().casefold()
    if type_ref == "boolean":
        return bool(a) is bool(b)
    if type_ref == "double":
        return abs(float(a) - float(b)) <= 1e-9
    return int(a) == int(b)


# ---------------------------------------------------------------------------
# Unary tests

@dataclass(frozen=True)
class Wildcard:
    def accepts(self, raw, type_ref: str) -> bool:
        return True


@dataclass(frozen=True)
class Eq:
    value: Value

    def accepts(self, raw, type_ref: str) -> bool:
        return values_equal(raw, self.value.raw, type_ref)


@dataclass(frozen=True)
class Compare:
    op: str  # one of < <= > >=
    bound: float

    def accepts(self, raw, type_ref: str) -> bool:
        x = float(raw)
        if self.op == "<":
            return x < self.bound
        if self.op == "<=":
            return x <= self.bound
        if self.op == ">":
            return x > self.bound
        return x >= self.bound


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def accepts(self, raw, type_ref: str) -> bool:
        x = float(raw)
        if self.lo_closed:
            if x < self.lo:
                return False
        elif x <= self.lo:
            return False
        if self.hi_closed:
            return x <= self.hi
        return x < self.hi


@dataclass(frozen=True)
class AnyOf:
    tests: tuple

    def accepts(self, raw, type_ref: str) -> bool:
        return any(t.accepts(raw, type_ref) for t in self.tests)


@dataclass(frozen=True)
class Not:
    test: "UnaryTest"

    def accepts(self, raw, type_ref: str) -> bool:
        return not self.test.accepts(raw, type_ref)


UnaryTest = Union[Wildcard, Eq, Compare, Interval, AnyOf, Not]


# ---------------------------------------------------------------------------
# Tables and the model

@dataclass(frozen=True)
class InputClause:
    label: str
    expression: str  # the input expression text, names the feeding variable
    type_ref: str
    source: Source = Source.USER

    @property
    def normalized_name(self) -> str:
        return normalize_name(self.label)

    @property
    def expression_name(self) -> str:
        return normalize_name(self.expression)


@dataclass(frozen=True)
class OutputClause:
    label: str
    type_ref: str

    @property
    def normalized_name(self) -> str:
        return normalize_name(self.label)


@dataclass(frozen=True)
class Rule:
    number: int
    input_entries: tuple
    output_entry: Value
    annotation: str = ""


@dataclass(frozen=True)
class DecisionTable:
    hit_policy: str
    inputs: tuple
    output: OutputClause
    rules: tuple


@dataclass(frozen=True)
class Decision:
    name: str
    table: DecisionTable

    @property
    def normalized_name(self) -> str:
        return normalize_name(self.name)


@dataclass(frozen=True)
class LiteralExpression:
    name: str
    expression: str
    result_type: str

    @property
    def normalized_name(self) -> str:
        return normalize_name(self.name)


@dataclass(frozen=True)
class Requirement:
    consumer: str  # normalized names
    supplier: str
    kind: str  # "decision" | "literal"


@dataclass(frozen=True)
class DmnModel:
    name: str
    decisions: tuple
    literals: tuple
    requirements: tuple
    main_decision: str

    def decision(self, normalized: str) -> Decision:
        for d in self.decisions:
            if d.normalized_name == normalized:
                return d
        raise KeyError(normalized)

    def literal(self, normalized: str) -> LiteralExpression:
        for lit in self.literals:
            if lit.normalized_name == normalized:
                return lit
        raise KeyError(normalized)

    def element(self, normalized: str):
        for d in self.decisions:
            if d.normalized_name == normalized:
                return d
        for lit in self.literals:
            if lit.normalized_name == normalized:
                return lit
        raise KeyError(normalized)

    def element_names(self) -> list:
        return [d.normalized_name for d in self.decisions] + [
            lit.normalized_name for lit in self.literals
        ]

    def suppliers_of(self, consumer: str) -> list:
        return [r.supplier for r in self.requirements if r.consumer == consumer]

    def consumers_of(self, supplier: str) -> list:
        return [r.consumer for r in self.requirements if r.supplier == supplier]

    def user_input_clauses(self) -> dict:
        """Map normalized input name -> InputClause for user-sourced columns.

        The first declaration wins when the same user input feeds several
        tables (types must agree; validation flags mismatches).
        """
        out: dict = {}
        for d in self.decisions:
            for clause in d.table.inputs:
                if clause.source is Source.USER:
                    out.setdefault(clause.normalized_name, clause)
        return out

    def input_clauses_named(self, normalized: str) -> list:
        """Columns bound by a name, matched on label or expression."""
        found = []
        for d in self.decisions:
            for clause in d.table.inputs:
                if normalized in (clause.normalized_name, clause.expression_name):
                    found.append((d, clause))
        return found
