"""Decision evaluation: single tables, literal expressions and whole graphs.

Assignments map normalized input-column names to plain Python values.  An
assignment may bind a supplier-fed column directly; the direct binding wins
over computing the supplier.  Evaluation tolerates partial assignments:
a rule matches when every non-wildcard entry accepts a bound value, and on
a validated (overlap-free) table one full match decides the row even if
other rules would need values that are not bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import feel
from .errors import (EvalTypeError, MissingBinding, MultipleRulesMatched,
                     NoRuleMatched)
from .model import (Decision, DecisionTable, DmnModel, LiteralExpression, Rule,
                    Source, Wildcard, coerce_value, normalize_name)


def match_rule(rule: Rule, table: DecisionTable, assignment: dict) -> bool:
    """True iff every input entry accepts its bound value.

    Wildcards accept without looking at the assignment; a non-wildcard
    entry over an unbound column raises MissingBinding.
    """
    for clause, test in zip(table.inputs, rule.input_entries):
        if isinstance(test, Wildcard):
            continue
        name = clause.normalized_name
        if name not in assignment:
            raise MissingBinding(name)
        if not test.accepts(assignment[name], clause.type_ref):
            return False
    return True


def evaluate_table(table: DecisionTable, assignment: dict, decision_name: str = "?"):
    """Evaluate one table; returns (output value, matched rule).

    Raises NoRuleMatched / MultipleRulesMatched / MissingBinding.  A single
    full match wins even when other rules cannot be decided, which is sound
    for overlap-free tables.
    """
    matched = []
    missing = []
    for rule in table.rules:
        try:
            if match_rule(rule, table, assignment):
                matched.append(rule)
        except MissingBinding as exc:
            missing.append(exc.name)
    if len(matched) == 1:
        return matched[0].output_entry.raw, matched[0]
    if len(matched) > 1:
        raise MultipleRulesMatched(decision_name, [r.number for r in matched])
    if missing:
        raise MissingBinding(missing[0])
    raise NoRuleMatched(decision_name, assignment)


def eval_literal(model: DmnModel, name: str, assignment: dict):
    """Evaluate a literal expression under user bindings plus supplier values."""
    lit = model.literal(normalize_name(name))
    env = dict(assignment)
    ast = feel.parse_expression(lit.expression)
    value = feel.evaluate(ast, env)
    try:
        return coerce_value(value, lit.result_type)
    except ValueError as exc:
        raise EvalTypeError(
            f"literal {lit.name!r} produced {value!r}, not a {lit.result_type}"
        ) from None


def topo_order(model: DmnModel) -> list:
    """Every supplier before its consumers; ties broken by normalized name."""
    names = model.element_names()
    pending = {name: set(model.suppliers_of(name)) for name in names}
    order = []
    while pending:
        ready = sorted(n for n, deps in pending.items() if not deps)
        if not ready:
            raise ValueError("requirement cycle; validate the model first")
        nxt = ready[0]
        order.append(nxt)
        del pending[nxt]
        for deps in pending.values():
            deps.discard(nxt)
    return order


def reachable_from(model: DmnModel, target: str) -> set:
    seen = set()
    stack = [target]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(model.suppliers_of(node))
    return seen


@dataclass(frozen=True)
class TraceEntry:
    name: str
    kind: str  # "decision" | "literal" | "bound"
    value: object
    rule_number: Optional[int] = None
    used: tuple = ()  # ((input name, value), ...)


@dataclass(frozen=True)
class EvalTrace:
    target: str
    entries: tuple

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "entries": [
                {
                    "name": e.name,
                    "kind": e.kind,
                    "value": e.value,
                    "rule": e.rule_number,
                    "used": {k: v for k, v in e.used},
                }
                for e in self.entries
            ],
        }


@dataclass(frozen=True)
class EvalResult:
    value: object
    trace: EvalTrace


def _coerced(assignment: dict, key: str, clause) -> object:
    try:
        return coerce_value(assignment[key], clause.type_ref)
    except ValueError:
        raise EvalTypeError(
            f"value {assignment[key]!r} does not fit "
            f"{clause.type_ref} input {key!r}"
        ) from None


def evaluate_drd(model: DmnModel, decision: str, assignment: dict) -> EvalResult:
    """Evaluate a decision and everything it requires.

    The assignment must bind (directly or through computable suppliers)
    every value some non-wildcard entry on the decisive path needs; inputs
    that only wildcarded rules read may stay unbound.
    """
    target = normalize_name(decision)
    model.element(target)  # raises KeyError on unknown names
    wanted = reachable_from(model, target)
    order = [n for n in topo_order(model) if n in wanted]

    assignment = {normalize_name(k): v for k, v in assignment.items()}
    outputs = {}     # element name -> computed value
    failures = {}    # element name -> exception explaining unavailability
    entries = []

    def column_value(decision_obj, clause):
        """Value for one table column, or raise the blocking failure.

        A direct binding (under the column label or its expression name)
        beats computing the supplier, so callers can pin intermediate
        results.
        """
        for key in (clause.normalized_name, clause.expression_name):
            if key in assignment:
                return _coerced(assignment, key, clause)
        if clause.source is not Source.USER:
            supplier = clause.expression_name
            if supplier in outputs:
                return outputs[supplier]
            raise failures.get(supplier, MissingBinding(clause.normalized_name))
        raise MissingBinding(clause.normalized_name)

    for node in order:
        element = model.element(node)
        if isinstance(element, LiteralExpression):
            env = dict(assignment)
            for sup in model.suppliers_of(node):
                if sup in outputs and sup not in env:
                    env[sup] = outputs[sup]
            try:
                value = eval_literal(model, node, env)
            except (EvalTypeError, MissingBinding) as exc:
                failures[node] = exc
                continue
            except feel.ParseError as exc:
                failures[node] = exc
                continue
            outputs[node] = value
            entries.append(TraceEntry(name=node, kind="literal", value=value))
            continue

        table = element.table
        row = {}
        blocked = None
        for clause in table.inputs:
            try:
                row[clause.normalized_name] = column_value(element, clause)
            except Exception as exc:  # recorded; only fatal if a rule needs it
                blocked = blocked or exc
        try:
            value, rule = evaluate_table(table, row, node)
        except MissingBinding as exc:
            failures[node] = blocked or exc
            if node == target:
                raise failures[node]
            continue
        except (NoRuleMatched, MultipleRulesMatched) as exc:
            failures[node] = exc
            if node == target:
                raise
            continue
        outputs[node] = value
        used = tuple(
            (clause.normalized_name, row[clause.normalized_name])
            for clause, test in zip(table.inputs, rule.input_entries)
            if not isinstance(test, Wildcard)
        )
        entries.append(TraceEntry(name=node, kind="decision", value=value,
                                  rule_number=rule.number, used=used))

    return EvalResult(value=outputs[target],
                      trace=EvalTrace(target=target, entries=tuple(entries)))


def format_value(value) -> str:
    """Human rendering used in chat responses and the CLI."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)
