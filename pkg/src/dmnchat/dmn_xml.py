"""Reading, writing and validating the supported DMN XML subset.

The subset: one <definitions> root; each <decision> carries either a
<decisionTable> (hit policy UNIQUE, single output) or a <literalExpression>
with a typed <variable>; <informationRequirement>/<requiredDecision> edges
link them.  inputData declarations and layout/extension elements are
ignored; anything else unknown raises UnsupportedFeature.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional

from . import feel
from .errors import (CyclicDependency, UnresolvedReference, UnsupportedFeature,
                     XmlError)
from .model import (Decision, DecisionTable, DmnModel, InputClause,
                    LiteralExpression, NUMERIC_TYPES, OutputClause, Requirement,
                    Rule, SCALAR_TYPES, Source, Value, normalize_name)
from .unary import parse_unary_test, print_unary_test

DMN_NS = "https://www.omg.org/spec/DMN/20191111/MODEL/"

_IGNORED_TAGS = {
    "description", "extensionElements", "inputData", "variable",
    "authorityRequirement", "knowledgeRequirement",
}


def _tag(el) -> str:
    return el.tag.rsplit("}", 1)[-1]


def _text(el) -> str:
    node = None
    for child in el:
        if _tag(child) == "text":
            node = child
            break
    if node is None or node.text is None:
        raise XmlError(f"<{_tag(el)}> is missing its <text> content")
    return node.text


def _parse_output_value(text: str, type_ref: str, decision: str, rule: int) -> Value:
    raw = text.strip()
    if type_ref == "string":
        if len(raw) >= 2 and raw[0] in "\"'" and raw[-1] == raw[0]:
            raw = raw[1:-1]
        return Value("string", raw)
    if type_ref == "boolean":
        if raw.lower() == "true":
            return Value("boolean", True)
        if raw.lower() == "false":
            return Value("boolean", False)
        raise XmlError(
            f"output entry {raw!r} of decision {decision!r} rule {rule} is not a boolean"
        )
    if type_ref in NUMERIC_TYPES:
        try:
            if type_ref == "double":
                return Value("double", float(raw))
            return Value(type_ref, int(raw))
        except ValueError:
            raise XmlError(
                f"output entry {raw!r} of decision {decision!r} rule {rule} is not a number"
            ) from None
    raise UnsupportedFeature(f"output type {type_ref!r}")


def _parse_table(el, decision_name: str) -> DecisionTable:
    policy = el.get("hitPolicy", "UNIQUE")
    if policy not in ("UNIQUE", "U"):
        raise UnsupportedFeature(
            f"hit policy {policy!r} on decision {decision_name!r}; only UNIQUE is supported"
        )
    inputs = []
    outputs = []
    rules = []
    for child in el:
        tag = _tag(child)
        if tag == "input":
            expr_el = None
            for sub in child:
                if _tag(sub) == "inputExpression":
                    expr_el = sub
            if expr_el is None:
                raise XmlError(f"<input> without <inputExpression> in {decision_name!r}")
            expr = _text(expr_el).strip()
            type_ref = expr_el.get("typeRef", "string")
            if type_ref not in SCALAR_TYPES:
                raise UnsupportedFeature(f"input type {type_ref!r} in {decision_name!r}")
            label = child.get("label") or expr
            inputs.append(InputClause(label=label, expression=expr, type_ref=type_ref))
        elif tag == "output":
            outputs.append(child)
        elif tag == "rule":
            rules.append(child)
        elif tag in _IGNORED_TAGS:
            continue
        else:
            raise UnsupportedFeature(f"<{tag}> inside decisionTable of {decision_name!r}")
    if len(outputs) != 1:
        raise UnsupportedFeature(
            f"decision {decision_name!r} must have exactly one output column"
        )
    out_el = outputs[0]
    out_type = out_el.get("typeRef", "string")
    if out_type not in SCALAR_TYPES:
        raise UnsupportedFeature(f"output type {out_type!r} in {decision_name!r}")
    output = OutputClause(label=out_el.get("label") or out_el.get("name") or "output",
                          type_ref=out_type)

    parsed_rules = []
    for idx, rule_el in enumerate(rules, start=1):
        in_entries = []
        out_entries = []
        for sub in rule_el:
            tag = _tag(sub)
            if tag == "inputEntry":
                in_entries.append(_text(sub))
            elif tag == "outputEntry":
                out_entries.append(_text(sub))
            elif tag not in _IGNORED_TAGS:
                raise UnsupportedFeature(f"<{tag}> inside rule of {decision_name!r}")
        if len(out_entries) != 1:
            raise XmlError(
                f"rule {idx} of {decision_name!r} must have exactly one output entry"
            )
        if len(in_entries) != len(inputs):
            raise XmlError(
                f"rule {idx} of {decision_name!r} has {len(in_entries)} input entries, "
                f"expected {len(inputs)}"
            )
        tests = tuple(
            parse_unary_test(text, clause.type_ref, decision=decision_name,
                             rule=idx, column=col)
            for col, (text, clause) in enumerate(zip(in_entries, inputs), start=1)
        )
        value = _parse_output_value(out_entries[0], out_type, decision_name, idx)
        parsed_rules.append(Rule(number=idx, input_entries=tests, output_entry=value))

    return DecisionTable(hit_policy="U", inputs=tuple(inputs), output=output,
                         rules=tuple(parsed_rules))


def parse_dmn(text: str) -> DmnModel:
    """Parse DMN XML text into a model, or raise."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlError(f"not well-formed XML: {exc}") from None
    if _tag(root) != "definitions":
        raise XmlError(f"expected <definitions> root, found <{_tag(root)}>")

    model_name = root.get("name", "model")
    raw_decisions = []  # (id, name, requirements hrefs, body element)
    for child in root:
        tag = _tag(child)
        if tag == "decision":
            el_id = child.get("id") or ("d_" + normalize_name(child.get("name", "")))
            name = child.get("name")
            if not name:
                raise XmlError(f"decision {el_id!r} has no name")
            hrefs = []
            body = None
            variable = None
            for sub in child:
                sub_tag = _tag(sub)
                if sub_tag == "informationRequirement":
                    req = None
                    for r in sub:
                        if _tag(r) == "requiredDecision":
                            req = r.get("href", "")
                        elif _tag(r) == "requiredInput":
                            req = None  # user input declaration, nothing to wire
                        else:
                            raise UnsupportedFeature(
                                f"<{_tag(r)}> requirement on decision {name!r}"
                            )
                    if req is not None:
                        if not req.startswith("#"):
                            raise UnresolvedReference(f"href {req!r} on decision {name!r}")
                        hrefs.append(req[1:])
                elif sub_tag in ("decisionTable", "literalExpression"):
                    body = sub
                elif sub_tag == "variable":
                    variable = sub
                elif sub_tag in _IGNORED_TAGS:
                    continue
                else:
                    raise UnsupportedFeature(f"<{sub_tag}> inside decision {name!r}")
            if body is None:
                raise UnsupportedFeature(
                    f"decision {name!r} has neither a decision table nor a literal expression"
                )
            raw_decisions.append((el_id, name, hrefs, body, variable))
        elif tag in _IGNORED_TAGS:
            continue
        else:
            raise UnsupportedFeature(f"top-level <{tag}>")

    if not raw_decisions:
        raise XmlError("model contains no decisions")

    by_id = {}
    for el_id, name, _, _, _ in raw_decisions:
        if el_id in by_id:
            raise XmlError(f"duplicate element id {el_id!r}")
        by_id[el_id] = normalize_name(name)

    decisions = []
    literals = []
    requirements = []
    for el_id, name, hrefs, body, variable in raw_decisions:
        normalized = normalize_name(name)
        for href in hrefs:
            if href not in by_id:
                raise UnresolvedReference(
                    f"decision {name!r} requires unknown element {href!r}"
                )
        if _tag(body) == "decisionTable":
            decisions.append((name, body, el_id, hrefs))
        else:
            if variable is None or not variable.get("typeRef"):
                raise XmlError(
                    f"literal expression {name!r} needs a <variable typeRef=...>"
                )
            result_type = variable.get("typeRef")
            if result_type not in SCALAR_TYPES:
                raise UnsupportedFeature(f"literal result type {result_type!r}")
            literals.append(LiteralExpression(name=name, expression=_text(body).strip(),
                                              result_type=result_type))
            for href in hrefs:
                requirements.append(Requirement(consumer=normalized,
                                                supplier=by_id[href], kind=""))

    # literal vs decision supplier kinds are known only once all names exist
    literal_names = {lit.normalized_name for lit in literals}
    table_names = {normalize_name(name) for name, _, _, _ in decisions}

    parsed_decisions = []
    for name, body, el_id, hrefs in decisions:
        normalized = normalize_name(name)
        table = _parse_table(body, name)
        suppliers = {by_id[h] for h in hrefs}
        resolved_inputs = []
        for clause in table.inputs:
            source = Source.USER
            if clause.expression_name in suppliers:
                source = (Source.LITERAL if clause.expression_name in literal_names
                          else Source.DECISION)
            resolved_inputs.append(InputClause(label=clause.label,
                                               expression=clause.expression,
                                               type_ref=clause.type_ref,
                                               source=source))
        table = DecisionTable(hit_policy=table.hit_policy,
                              inputs=tuple(resolved_inputs),
                              output=table.output, rules=table.rules)
        parsed_decisions.append(Decision(name=name, table=table))
        for href in hrefs:
            supplier = by_id[href]
            kind = "literal" if supplier in literal_names else "decision"
            requirements.append(Requirement(consumer=normalized, supplier=supplier,
                                            kind=kind))

    requirements = [
        Requirement(r.consumer, r.supplier,
                    r.kind or ("literal" if r.supplier in literal_names else "decision"))
        for r in requirements
    ]

    all_names = [d.normalized_name for d in parsed_decisions] + sorted(literal_names)
    if len(set(all_names)) != len(all_names):
        dupes = sorted({n for n in all_names if all_names.count(n) > 1})
        raise XmlError(f"element names collide after normalization: {dupes}")
    for req in requirements:
        if req.supplier not in set(all_names):
            raise UnresolvedReference(f"requirement on unknown element {req.supplier!r}")

    _check_acyclic(all_names, requirements)

    consumed = {r.supplier for r in requirements}
    roots = [d.normalized_name for d in parsed_decisions
             if d.normalized_name not in consumed]
    if len(roots) != 1:
        raise XmlError(
            f"main decision not unique: candidates {sorted(roots)}"
        )

    return DmnModel(name=model_name, decisions=tuple(parsed_decisions),
                    literals=tuple(sorted(literals, key=lambda l: l.normalized_name)),
                    requirements=tuple(sorted(set(requirements),
                                              key=lambda r: (r.consumer, r.supplier))),
                    main_decision=roots[0])


def _check_acyclic(names, requirements):
    suppliers = {}
    for r in requirements:
        suppliers.setdefault(r.consumer, []).append(r.supplier)
    state = {}  # 0 visiting, 1 done

    def visit(node, stack):
        if state.get(node) == 1:
            return
        if state.get(node) == 0:
            cycle = stack[stack.index(node):] + [node]
            raise CyclicDependency(" -> ".join(cycle))
        state[node] = 0
        for sup in suppliers.get(node, []):
            visit(sup, stack + [node])
        state[node] = 1

    for name in names:
        visit(name, [])


# ---------------------------------------------------------------------------
# Serialization

def _value_text(value: Value) -> str:
    if value.type_ref == "string":
        return f'"{value.raw}"'
    if value.type_ref == "boolean":
        return "true" if value.raw else "false"
    if isinstance(value.raw, float) and value.raw.is_integer() and value.type_ref != "double":
        return str(int(value.raw))
    return repr(value.raw) if isinstance(value.raw, float) else str(value.raw)


def serialize_dmn(model: DmnModel) -> str:
    """Render a model back to canonical XML (stable output for equal models)."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<definitions xmlns="{DMN_NS}" name="{model.name}" '
        f'namespace="urn:dmnchat:{normalize_name(model.name)}">',
    ]
    reqs = {}
    for r in model.requirements:
        reqs.setdefault(r.consumer, []).append(r.supplier)

    def emit_requirements(normalized):
        for supplier in sorted(reqs.get(normalized, [])):
            lines.append('    <informationRequirement>')
            lines.append(f'      <requiredDecision href="#d_{supplier}"/>')
            lines.append('    </informationRequirement>')

    for decision in model.decisions:
        n = decision.normalized_name
        lines.append(f'  <decision id="d_{n}" name="{_escape(decision.name)}">')
        emit_requirements(n)
        table = decision.table
        lines.append('    <decisionTable hitPolicy="UNIQUE">')
        for clause in table.inputs:
            lines.append(f'      <input label="{_escape(clause.label)}">')
            lines.append(f'        <inputExpression typeRef="{clause.type_ref}">')
            lines.append(f'          <text>{_escape(clause.expression)}</text>')
            lines.append('        </inputExpression>')
            lines.append('      </input>')
        lines.append(f'      <output label="{_escape(table.output.label)}" '
                     f'typeRef="{table.output.type_ref}"/>')
        for rule in table.rules:
            lines.append('      <rule>')
            for test in rule.input_entries:
                lines.append(f'        <inputEntry><text>{_escape(print_unary_test(test))}'
                             '</text></inputEntry>')
            lines.append(f'        <outputEntry><text>'
                         f'{_escape(_value_text(rule.output_entry))}</text></outputEntry>')
            lines.append('      </rule>')
        lines.append('    </decisionTable>')
        lines.append('  </decision>')

    for lit in model.literals:
        n = lit.normalized_name
        lines.append(f'  <decision id="d_{n}" name="{_escape(lit.name)}">')
        lines.append(f'    <variable name="{_escape(lit.name)}" typeRef="{lit.result_type}"/>')
        emit_requirements(n)
        lines.append('    <literalExpression>')
        lines.append(f'      <text>{_escape(lit.expression)}</text>')
        lines.append('    </literalExpression>')
        lines.append('  </decision>')

    lines.append('</definitions>')
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")

            .replace(">", "&gt;").replace('"', "&quot;"))


# ---------------------------------------------------------------------------
# Validation

@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str  # "error" | "warning"
    message: str
    decision: Optional[str] = None
    rule: Optional[int] = None
    column: Optional[int] = None

    def location(self) -> str:
        parts = []
        if self.decision:
            parts.append(self.decision)
        if self.rule is not None:
            parts.append(f"rule {self.rule}")
        if self.column is not None:
            parts.append(f"column {self.column}")
        return ", ".join(parts)


def validate_model(model: DmnModel) -> list:
    """Model-level checks; returns diagnostics sorted by location."""
    out = []

    def err(code, message, **loc):
        out.append(Diagnostic(code, "error", message, **loc))

    def warn(code, message, **loc):
        out.append(Diagnostic(code, "warning", message, **loc))

    names = model.element_names()
    for name in sorted({n for n in names if names.count(n) > 1}):
        err("NAME_COLLISION", f"multiple elements normalize to {name!r}")

    known = set(names)
    for req in model.requirements:
        if req.supplier not in known:
            err("UNRESOLVED", f"requirement on unknown element {req.supplier!r}",
                decision=req.consumer)

    try:
        _check_acyclic(names, model.requirements)
    except CyclicDependency as exc:
        err("CYCLE", f"requirement cycle: {exc}")

    consumed = {r.supplier for r in model.requirements}
    roots = [d.normalized_name for d in model.decisions
             if d.normalized_name not in consumed]
    if len(roots) != 1:
        err("MAIN_NOT_UNIQUE",
            f"main decision not unique: candidates {sorted(roots)}")

    seen_user_types = {}
    for decision in model.decisions:
        table = decision.table
        dname = decision.normalized_name
        if table.hit_policy != "U":
            err("HIT_POLICY", f"unsupported hit policy {table.hit_policy!r}",
                decision=dname)
        col_names = [c.normalized_name for c in table.inputs]
        for cname in sorted({c for c in col_names if col_names.count(c) > 1}):
            err("NAME_COLLISION",
                f"two inputs of {decision.name!r} normalize to {cname!r}",
                decision=dname)
        for i, clause in enumerate(table.inputs, start=1):
            if clause.source is Source.USER:
                prior = seen_user_types.get(clause.normalized_name)
                if prior and prior != clause.type_ref:
                    err("TYPE_MISMATCH",
                        f"user input {clause.normalized_name!r} declared as "
                        f"{prior} and {clause.type_ref}",
                        decision=dname, column=i)
                seen_user_types.setdefault(clause.normalized_name, clause.type_ref)
        expected = list(range(1, len(table.rules) + 1))
        got = [r.number for r in table.rules]
        if got != expected:
            err("RULE_NUMBERING",
                f"rule numbers {got} are not 1..{len(table.rules)}",
                decision=dname)
        for rule in table.rules:
            if len(rule.input_entries) != len(table.inputs):
                err("ARITY",
                    f"rule has {len(rule.input_entries)} entries, "
                    f"expected {len(table.inputs)}",
                    decision=dname, rule=rule.number)
            if rule.output_entry.type_ref != table.output.type_ref and not (
                rule.output_entry.type_ref in NUMERIC_TYPES
                and table.output.type_ref in NUMERIC_TYPES
            ):
                err("TYPE_MISMATCH",
                    f"output entry type {rule.output_entry.type_ref} does not "
                    f"match column type {table.output.type_ref}",
                    decision=dname, rule=rule.number)
        if not table.rules:
            warn("EMPTY_TABLE", f"decision {decision.name!r} has no rules",
                 decision=dname)

    for lit in model.literals:
        if lit.result_type not in SCALAR_TYPES:
            err("TYPE_MISMATCH", f"literal result type {lit.result_type!r}",
                decision=lit.normalized_name)
        try:
            feel.parse_expression(lit.expression)
        except Exception as exc:
            err("EXPR_PARSE", f"cannot parse literal expression: {exc}",
                decision=lit.normalized_name)

    reachable = _reachable(model)
    for name in names:
        if name not in reachable:
            warn("DANGLING", f"element {name!r} is not reachable from the main decision",
                 decision=name)

    out.sort(key=lambda d: (d.decision or "", d.rule or 0, d.column or 0, d.code))
    return out


def _reachable(model: DmnModel) -> set:
    seen = set()
    stack = [model.main_decision] if model.main_decision else []
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(model.suppliers_of(node))
    return seen
