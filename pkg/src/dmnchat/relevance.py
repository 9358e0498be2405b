"""Which inputs can still change a decision, and where rules collide.

Necessity is semantic: an input is necessary under a partial assignment
iff two completions over the probe domains that differ only in that input
produce different outcomes (different values, or value vs. error).  The
probe domains make the check finite: booleans enumerate, strings enumerate
their rule constants, numerics probe every constraint boundary, the
boundary's neighbours and one interior point per interval.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import feel
from .engine import evaluate_drd, match_rule
from .errors import (DmnError, EmptyDomain, EvalTypeError, MissingBinding,
                     MultipleRulesMatched, NoRuleMatched)
from .model import (AnyOf, Compare, DecisionTable, DmnModel, Eq, Interval,
                    LiteralExpression, Not, Source, normalize_name)


def _free_vars_ordered(ast) -> list:
    """Free variables in left-to-right first-appearance order."""
    out = []

    def walk(node):
        if isinstance(node, feel.Var):
            if node.name not in out:
                out.append(node.name)
        elif isinstance(node, feel.If):
            walk(node.cond), walk(node.then), walk(node.orelse)
        elif isinstance(node, feel.Cmp):
            walk(node.left), walk(node.right)
        elif isinstance(node, feel.BoolOp):
            for p in node.parts:
                walk(p)
        elif isinstance(node, feel.NotOp):
            walk(node.arg)

    walk(ast)
    return out


def required_inputs(model: DmnModel, decision: str) -> list:
    """User-sourced inputs a decision transitively depends on.

    Order: walk the target table's columns in declaration order, resolving
    each supplier-fed column to its own required inputs in place; the first
    occurrence of a name wins.
    """
    target = normalize_name(decision)
    user_columns = set(model.user_input_clauses())
    out = []
    visiting = set()

    def emit(name):
        if name not in out:
            out.append(name)

    def visit(name):
        if name in visiting:
            return  # cycles are a validation error; do not recurse forever
        visiting.add(name)
        element = model.element(name)
        if isinstance(element, LiteralExpression):
            suppliers = set(model.suppliers_of(name))
            ast = feel.parse_expression(element.expression)
            for var in _free_vars_ordered(ast):
                if var in suppliers:
                    visit(var)
                elif var in user_columns:
                    emit(var)
                else:
                    try:
                        model.element(var)
                    except KeyError:
                        emit(var)  # treated as user input; validation flags it
                    else:
                        visit(var)
        else:
            for clause in element.table.inputs:
                if clause.source is Source.USER:
                    emit(clause.normalized_name)
                else:
                    visit(clause.expression_name)
        visiting.discard(name)

    visit(target)
    return out


# ---------------------------------------------------------------------------
# Probe domains

def _tests_on_column(test, out):
    if isinstance(test, Eq):
        out.append(test)
    elif isinstance(test, (Compare, Interval)):
        out.append(test)
    elif isinstance(test, AnyOf):
        for t in test.tests:
            _tests_on_column(t, out)
    elif isinstance(test, Not):
        _tests_on_column(test.test, out)


def _column_tests(pairs):
    """All non-wildcard atomic tests over [(table, column index)] pairs."""
    tests = []
    for table, idx in pairs:
        for rule in table.rules:
            _tests_on_column(rule.input_entries[idx], tests)
    return tests


def _numeric_probe(tests, integral: bool, name: str) -> list:
    boundaries = []
    interiors = []
    for t in tests:
        if isinstance(t, Compare):
            boundaries.append(t.bound)
        elif isinstance(t, Interval):
            boundaries.extend([t.lo, t.hi])
            mid = (t.lo + t.hi) // 2 if integral else (t.lo + t.hi) / 2
            interiors.append(mid)
        elif isinstance(t, Eq) and t.value.is_numeric:
            boundaries.append(t.value.raw)
    if not boundaries:
        raise EmptyDomain(name)
    probe = set(interiors)
    for b in boundaries:
        probe.update([b - 1, b, b + 1])
    if integral:
        return sorted(int(p) for p in probe)
    return sorted(float(p) for p in probe)


def _string_domain(tests, name: str) -> list:
    values = []
    for t in tests:
        if isinstance(t, Eq) and t.value.type_ref == "string":
            raw = str(t.value.raw)
            if raw.casefold() not in [v.casefold() for v in values]:
                values.append(raw)
    if not values:
        raise EmptyDomain(name)
    return values


def domain_of(model: DmnModel, input_name: str) -> list:
    """Finite probe domain for an input, from every column bearing its name."""
    name = normalize_name(input_name)
    found = model.input_clauses_named(name)
    if not found:
        raise EmptyDomain(name)
    type_ref = found[0][1].type_ref
    pairs = []
    for decision, clause in found:
        idx = next(i for i, c in enumerate(decision.table.inputs) if c is clause)
        pairs.append((decision.table, idx))
    tests = _column_tests(pairs)
    if type_ref == "boolean":
        return [False, True]
    if type_ref == "string":
        return _string_domain(tests, name)
    return _numeric_probe(tests, type_ref in ("integer", "long"), name)


def table_column_domains(table: DecisionTable) -> dict:
    """Per-column probe domains from one table's own constraints."""
    out = {}
    for idx, clause in enumerate(table.inputs):
        tests = _column_tests([(table, idx)])
        if clause.type_ref == "boolean":
            out[clause.normalized_name] = [False, True]
        elif clause.type_ref == "string":
            out[clause.normalized_name] = _string_domain(tests, clause.normalized_name)
        else:
            out[clause.normalized_name] = _numeric_probe(
                tests, clause.type_ref in ("integer", "long"), clause.normalized_name
            )
    return out


# ---------------------------------------------------------------------------
# Necessity

def _canon(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        return value.strip().casefold()
    return value


def _outcome(model, decision, assignment):
    try:
        result = evaluate_drd(model, decision, assignment)
    except (NoRuleMatched, MissingBinding, MultipleRulesMatched,
            EvalTypeError) as exc:
        return ("error", type(exc).__name__)
    return ("ok", _canon(result.value))


def canonical_partial(partial: dict) -> tuple:
    return tuple(sorted((normalize_name(k), _canon(v)) for k, v in partial.items()))


def is_necessary(model: DmnModel, decision: str, input_name: str,
                 partial: dict, cache: dict = None) -> bool:
    """Can the input still change the outcome, given what is already bound?"""
    target = normalize_name(decision)
    name = normalize_name(input_name)
    partial = {normalize_name(k): v for k, v in partial.items()}
    if name in partial:
        return False
    inputs = required_inputs(model, target)
    if name not in inputs:
        return False

    key = (target, name, canonical_partial(partial))
    if cache is not None and key in cache:
        return cache[key]

    unbound = [u for u in inputs if u not in partial and u != name]
    domains = {u: domain_of(model, u) for u in unbound}
    own_domain = domain_of(model, name)

    result = False
    for combo in itertools.product(*(domains[u] for u in unbound)):
        base = dict(partial)
        base.update(zip(unbound, combo))
        seen = None
        for value in own_domain:
            base[name] = value
            outcome = _outcome(model, target, base)
            if seen is None:
                seen = outcome
            elif outcome != seen:
                result = True
                break
        if result:
            break

    if cache is not None:
        cache[key] = result
    return result


# ---------------------------------------------------------------------------
# Overlaps

@dataclass(frozen=True)
class Overlap:
    rule_a: int
    rule_b: int
    witness: dict


def detect_overlaps(table: DecisionTable, domains: dict = None) -> list:
    """All rule pairs some probe assignment satisfies together.

    Returns pairs (a < b) with one witness each, ordered by first discovery;
    an empty list certifies the table unique-hit over the probe domains.
    """
    if domains is None:
        domains = table_column_domains(table)
    names = [c.normalized_name for c in table.inputs]
    missing = [n for n in names if n not in domains]
    if missing:
        raise EmptyDomain(missing[0])

    found = {}
    for combo in itertools.product(*(domains[n] for n in names)):
        assignment = dict(zip(names, combo))
        hits = [r.number for r in table.rules if match_rule(r, table, assignment)]
        if len(hits) > 1:
            for a, b in itertools.combinations(hits, 2):
                found.setdefault((a, b), dict(assignment))
    return [Overlap(a, b, w) for (a, b), w in found.items()]
