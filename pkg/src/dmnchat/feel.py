"""A small FEEL-like expression language for literal expressions.

Supported forms: if/then/else, comparisons (= != < <= > >=), boolean
and/or/not(...), string/number/boolean literals, parentheses and variable
references by normalized name.  No arithmetic; the models this package
targets never need it.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import EvalTypeError, MissingBinding, ParseError
from .model import normalize_name

_KEYWORDS = {"if", "then", "else", "and", "or", "not", "true", "false"}

_NUM = re.compile(r"-?\d+(\.\d+)?")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    orelse: object


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    parts: tuple


@dataclass(frozen=True)
class NotOp:
    arg: object


def _tokenize(text: str) -> list:
    """Split into tokens; adjacent bare words merge into one variable name."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "\"'":
            j = text.find(ch, i + 1)
            if j < 0:
                raise ParseError(f"unterminated string in expression: {text!r}")
            tokens.append(("str", text[i + 1:j]))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            m = _NUM.match(text, i)
            tok = m.group(0)
            tokens.append(("num", float(tok) if "." in tok else int(tok)))
            i = m.end()
            continue
        if text.startswith(("<=", ">=", "!="), i):
            tokens.append(("op", text[i:i + 2]))
            i += 2
            continue
        if ch in "=<>()":
            tokens.append(("op", ch))
            i += 1
            continue
        m = _WORD.match(text, i)
        if m:
            word = m.group(0)
            low = word.lower()
            if low in _KEYWORDS:
                tokens.append(("kw", low))
            elif tokens and tokens[-1][0] == "name":
                tokens[-1] = ("name", tokens[-1][1] + normalize_name(word))
            else:
                tokens.append(("name", normalize_name(word)))
            i = m.end()
            continue
        raise ParseError(f"cannot tokenize expression at {text[i:]!r}")
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_kw(self, word):
        kind, val = self.take()
        if kind != "kw" or val != word:
            raise ParseError(f"expected {word!r}, found {val!r}")

    def parse_expr(self):
        kind, val = self.peek()
        if kind == "kw" and val == "if":
            self.take()
            cond = self.parse_expr()
            self.expect_kw("then")
            then = self.parse_expr()
            self.expect_kw("else")
            orelse = self.parse_expr()
            return If(cond, then, orelse)
        return self.parse_or()

    def parse_or(self):
        parts = [self.parse_and()]
        while self.peek() == ("kw", "or"):
            self.take()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else BoolOp("or", tuple(parts))

    def parse_and(self):
        parts = [self.parse_cmp()]
        while self.peek() == ("kw", "and"):
            self.take()
            parts.append(self.parse_cmp())
        return parts[0] if len(parts) == 1 else BoolOp("and", tuple(parts))

    def parse_cmp(self):
        left = self.parse_primary()
        kind, val = self.peek()
        if kind == "op" and val in ("=", "!=", "<", "<=", ">", ">="):
            self.take()
            right = self.parse_primary()
            return Cmp(val, left, right)
        return left

    def parse_primary(self):
        kind, val = self.take()
        if kind == "num" or kind == "str":
            return Lit(val)
        if kind == "kw" and val in ("true", "false"):
            return Lit(val == "true")
        if kind == "kw" and val == "not":
            k2, v2 = self.take()
            if (k2, v2) != ("op", "("):
                raise ParseError("not requires parentheses: not(...)")
            inner = self.parse_expr()
            k3, v3 = self.take()
            if (k3, v3) != ("op", ")"):
                raise ParseError("unterminated not(...)")
            return NotOp(inner)
        if kind == "kw" and val == "if":
            self.i -= 1
            return self.parse_expr()
        if kind == "op" and val == "(":
            inner = self.parse_expr()
            k2, v2 = self.take()
            if (k2, v2) != ("op", ")"):
                raise ParseError("unbalanced parentheses")
            return inner
        if kind == "name":
            return Var(val)
        raise ParseError(f"unexpected token {val!r}")


@lru_cache(maxsize=512)
def parse_expression(text: str):
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    ast = parser.parse_expr()
    if parser.i != len(tokens):
        raise ParseError(f"trailing tokens in expression {text!r}")
    return ast


def free_vars(ast) -> frozenset:
    if isinstance(ast, Var):
        return frozenset([ast.name])
    if isinstance(ast, Lit):
        return frozenset()
    if isinstance(ast, If):
        return free_vars(ast.cond) | free_vars(ast.then) | free_vars(ast.orelse)
    if isinstance(ast, Cmp):
        return free_vars(ast.left) | free_vars(ast.right)
    if isinstance(ast, BoolOp):
        out = frozenset()
        for p in ast.parts:
            out |= free_vars(p)
        return out
    if isinstance(ast, NotOp):
        return free_vars(ast.arg)
    raise TypeError(f"not an expression node: {ast!r}")


def _eq(a, b) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        return a.strip().casefold() == b.strip().casefold()
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(float(a) - float(b)) <= 1e-9
    return False


def evaluate(ast, env: dict):
    """Evaluate against an environment of normalized name -> value."""
    if isinstance(ast, Lit):
        return ast.value
    if isinstance(ast, Var):
        if ast.name not in env:
            raise MissingBinding(ast.name)
        return env[ast.name]
    if isinstance(ast, If):
        cond = evaluate(ast.cond, env)
        if not isinstance(cond, bool):
            raise EvalTypeError("if-condition did not evaluate to a boolean")
        return evaluate(ast.then if cond else ast.orelse, env)
    if isinstance(ast, Cmp):
        left = evaluate(ast.left, env)
        right = evaluate(ast.right, env)
        if ast.op == "=":
            return _eq(left, right)
        if ast.op == "!=":
            return not _eq(left, right)
        if not isinstance(left, (int, float)) or not isinstance(right, (int, float)) \
                or isinstance(left, bool) or isinstance(right, bool):
            raise EvalTypeError(f"ordering comparison on non-numbers: {ast.op}")
        if ast.op == "<":
            return left < right
        if ast.op == "<=":
            return left <= right
        if ast.op == ">":
            return left > right
        return left >= right
    if isinstance(ast, BoolOp):
        results = []
        for part in ast.parts:
            val = evaluate(part, env)
            if not isinstance(val, bool):
                raise EvalTypeError(f"{ast.op} over a non-boolean operand")
            results.append(val)
        return any(results) if ast.op == "or" else all(results)
    if isinstance(ast, NotOp):
        val = evaluate(ast.arg, env)
        if not isinstance(val, bool):
            raise EvalTypeError("not(...) over a non-boolean operand")
        return not val
    raise TypeError(f"not an expression node: {ast!r}")
