"""Exception hierarchy shared by every module of the workbench."""

from __future__ import annotations


class DualityLabError(Exception):
    pass


class MixedOwnership(DualityLabError):
    """Lattice elements from different algebras were combined."""


class NotACaba(DualityLabError):
    pass


class CarrierMismatch(DualityLabError):
    pass


class EnumerationTooLarge(DualityLabError):
    pass


class TooLarge(EnumerationTooLarge):
    pass


class NotDirectionallyAtomic(DualityLabError):
    pass


class NotOpenMap(DualityLabError):
    pass


class UnresolvedName(DualityLabError):
    pass


class DerivationError(DualityLabError):
    """Base class for derivation rejections; ``path`` locates the offending node."""

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SchemaMismatch(DerivationError):
    pass


class UnknownRule(DerivationError):
    pass


class UnknownFact(DerivationError):
    pass


class SideConditionFailed(DerivationError):
    pass


class SemanticLeafFalse(DerivationError):
    pass


class ParseError(DualityLabError):
    def __init__(self, message: str, line: int, column: int, expected: frozenset[str] = frozenset()) -> None:
        detail = f"{message} at {line}:{column}"
        if expected:
            detail += " (expected one of: " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
