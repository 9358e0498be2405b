"""Exception family shared across the package."""
from __future__ import annotations


class DmnError(Exception):
    """Base class for everything raised on purpose by this package."""


class XmlError(DmnError):
    pass


class UnsupportedFeature(DmnError):
    pass


class UnresolvedReference(DmnError):
    pass


class CyclicDependency(DmnError):
    pass


class ParseError(DmnError):
    """Bad unary test or literal expression text.

    Carries the location triple (decision, rule number, column index) when
    the caller knows it.
    """

    def __init__(self, message, decision=None, rule=None, column=None):
        self.decision = decision
        self.rule = rule
        self.column = column
        where = ""
        if decision is not None:
            where = f" [decision={decision}"
            if rule is not None:
                where += f", rule={rule}"
            if column is not None:
                where += f", column={column}"
            where += "]"
        super().__init__(message + where)


class TypeMismatch(ParseError):
    pass


class MissingBinding(DmnError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"no value bound for input {name!r}")


class NoRuleMatched(DmnError):
    def __init__(self, decision, assignment=None):
        self.decision = decision
        self.assignment = dict(assignment or {})
        super().__init__(f"no rule of {decision!r} matches the given values")


class MultipleRulesMatched(DmnError):
    def __init__(self, decision, numbers):
        self.decision = decision
        self.numbers = tuple(numbers)
        super().__init__(
            f"rules {list(numbers)} of {decision!r} all match; hit policy UNIQUE violated"
        )


class EvalTypeError(DmnError):
    pass


class EmptyDomain(DmnError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"cannot build a value domain for input {name!r}")


class CustomizationError(DmnError):
    pass


class SessionClosed(DmnError):
    pass


class SpecError(DmnError):
    """A phrase generation spec references something that does not exist."""


class UnknownInput(DmnError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"no input named {name!r} in this agent")
