"""Exception types shared across the engine."""

from __future__ import annotations


class EcosimError(Exception):
    """Base class for all engine errors."""


class UnknownKind(EcosimError):
    pass


class DuplicateKind(EcosimError):
    pass


class UnknownEntity(EcosimError):
    pass


class UnknownProperty(EcosimError):
    pass


class DimensionMismatch(EcosimError):
    pass


class ContainmentCycle(EcosimError):
    """Raised when a relation edit would make the In-graph cyclic."""


class ParseError(EcosimError):
    """Carries the source span of the first offending token and the
    token set that would have been accepted there."""

    def __init__(self, message: str, span: tuple[int, int], expected: frozenset[str] = frozenset()):
        super().__init__(message)
        self.message = message
        self.span = span
        self.expected = expected

    def __str__(self) -> str:
        base = f"{self.message} (at {self.span[0]}..{self.span[1]})"
        if self.expected:
            base += ", expected one of: " + ", ".join(sorted(self.expected))
        return base


class IllegalCharacter(ParseError):
    pass


class NoReferent(EcosimError):
    pass


class AmbiguousReferent(EcosimError):
    pass


class ActionFailure(EcosimError):
    """A denied or inapplicable action. Carries the deny reason."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class LibraryNotFound(EcosimError):
    pass


class DuplicateLibrary(EcosimError):
    pass


class NotSituationRule(EcosimError):
    pass


class SpecificRuleNotPromotable(EcosimError):
    pass


class ScenarioFormatError(EcosimError):
    pass


class DuplicateRuleWarning(UserWarning):
    """An affordance structurally equal to an installed one was declared again."""
