"""Parsing and printing of decision-table cell tests.

Grammar accepted per cell (whitespace-insensitive):

    cell      := "-" | disjunct ("," disjunct)*
    disjunct  := "not" "(" cell ")" | comparison | interval | literal
    comparison:= ("<" | "<=" | ">" | ">=") number
    interval  := ("[" | "(") number ".." number ("]" | ")")
    literal   := quoted string | bare token(s) | number | true | false

Commas split only at the top level (never inside quotes or brackets).
The canonical printer is the inverse used by the serializer; printing a
parsed cell and reparsing it yields an equal test.
"""
from __future__ import annotations

import re

from .errors import ParseError, TypeMismatch
from .model import (AnyOf, Compare, Eq, Interval, Not, NUMERIC_TYPES, UnaryTest,
                    Value, Wildcard)

_NUMBER = re.compile(r"^-?\d+(\.\d+)?$")
_CMP = re.compile(r"^(<=|>=|<|>)\s*(-?\d+(?:\.\d+)?)$")
_INTERVAL = re.compile(
    r"^([\[(])\s*(-?\d+(?:\.\d+)?)\s*\.\.\s*(-?\d+(?:\.\d+)?)\s*([\])])$"
)


def _split_top_level(text: str) -> list:
    parts = []
    depth = 0
    quote = None
    cur = []
    for ch in text:
        if quote:
            cur.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
            cur.append(ch)
        elif ch in "([":
            depth += 1
            cur.append(ch)
        elif ch in ")]":
            depth -= 1
            cur.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _parse_number(token: str, type_ref: str, loc: dict):
    if type_ref in ("integer", "long"):
        if "." in token:
            raise TypeMismatch(
                f"fractional constant {token!r} on {type_ref} column", **loc
            )
        return int(token)
    return float(token)


def _parse_single(text: str, type_ref: str, loc: dict) -> UnaryTest:
    text = text.strip()
    if not text:
        raise ParseError("empty test where a value was expected", **loc)

    low = text.lower()
    if low.startswith("not(") or low.startswith("not ("):
        inner = text[text.index("(") + 1:]
        if not inner.endswith(")"):
            raise ParseError(f"unterminated not(...) in {text!r}", **loc)
        return Not(parse_unary_test(inner[:-1], type_ref, **loc))

    m = _CMP.match(text)
    if m:
        if type_ref not in NUMERIC_TYPES:
            raise TypeMismatch(
                f"comparison {text!r} on {type_ref} column", **loc
            )
        return Compare(m.group(1), _parse_number(m.group(2), type_ref, loc))

    m = _INTERVAL.match(text)
    if m:
        if type_ref not in NUMERIC_TYPES:
            raise TypeMismatch(f"interval {text!r} on {type_ref} column", **loc)
        lo = _parse_number(m.group(2), type_ref, loc)
        hi = _parse_number(m.group(3), type_ref, loc)
        if lo > hi:
            raise ParseError(f"interval bounds out of order in {text!r}", **loc)
        return Interval(lo, hi, m.group(1) == "[", m.group(4) == "]")

    if (text.startswith('"') and text.endswith('"') and len(text) >= 2) or (
        text.startswith("'") and text.endswith("'") and len(text) >= 2
    ):
        if type_ref != "string":
            raise TypeMismatch(
                f"string constant {text} on {type_ref} column", **loc
            )
        return Eq(Value("string", text[1:-1]))

    if type_ref == "boolean":
        if low == "true":
            return Eq(Value("boolean", True))
        if low == "false":
            return Eq(Value("boolean", False))
        raise TypeMismatch(f"{text!r} is not a boolean constant", **loc)

    if type_ref in NUMERIC_TYPES:
        if _NUMBER.match(text):
            return Eq(Value(type_ref, _parse_number(text, type_ref, loc)))
        raise TypeMismatch(f"{text!r} is not a number", **loc)

    # bare (unquoted) string token(s)
    return Eq(Value("string", text))


def parse_unary_test(text: str, type_ref: str, decision=None, rule=None,
                     column=None) -> UnaryTest:
    """Parse one decision-table cell for a column of the given type."""
    loc = {"decision": decision, "rule": rule, "column": column}
    stripped = text.strip()
    if stripped == "-" or stripped == "":
        return Wildcard()
    parts = _split_top_level(stripped)
    tests = [_parse_single(p, type_ref, loc) for p in parts]
    if len(tests) == 1:
        return tests[0]
    return AnyOf(tuple(tests))


def _print_number(x) -> str:
    if isinstance(x, int):
        return str(x)
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def print_unary_test(test: UnaryTest) -> str:
    """Render a test to its canonical cell text."""
    if isinstance(test, Wildcard):
        return "-"
    if isinstance(test, Eq):
        v = test.value
        if v.type_ref == "string":
            return f'"{v.raw}"'
        if v.type_ref == "boolean":
            return "true" if v.raw else "false"
        return _print_number(v.raw)
    if isinstance(test, Compare):
        return f"{test.op}{_print_number(test.bound)}"
    if isinstance(test, Interval):
        lo = "[" if test.lo_closed else "("
        hi = "]" if test.hi_closed else ")"
        return f"{lo}{_print_number(test.lo)}..{_print_number(test.hi)}{hi}"
    if isinstance(test, AnyOf):
        return ",".join(print_unary_test(t) for t in test.tests)
    if isinstance(test, Not):
        return f"not({print_unary_test(test.test)})"
    raise TypeError(f"not a unary test: {test!r}")
