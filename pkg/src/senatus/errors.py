"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SenatusError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SenatusError):
    """Source text could not be parsed by its grammar frontend."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at {line}:{column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnsupportedLanguage(SenatusError):
    pass


class EmptySelection(SenatusError):
    """No feature survived scoring/selection."""


class OversizeInput(SenatusError):
    pass


class EmptyFeatureSet(SenatusError):
    pass


class EmptyQuery(SenatusError):
    pass


class BothEmpty(SenatusError):
    pass


class IndexError_(SenatusError):
    """Base for on-disk index problems (named to avoid shadowing the builtin)."""


class VersionMismatch(IndexError_):
    pass


class CorruptIndex(IndexError_):
    pass


class MissingComponent(IndexError_):
    pass


class EmptyGroundtruth(SenatusError):
    pass


class InsufficientData(SenatusError):
    pass


class SchemaError(SenatusError, ValueError):
    """An input record does not match the expected JSON shape."""
