"""Exception hierarchy shared by every acclab module."""

from __future__ import annotations


class AccLabError(Exception):
    """Base class for all acclab errors."""


class SortError(AccLabError):
    """A binding or construction breaks well-sortedness."""


class ArityError(AccLabError):
    """A function or fact symbol is applied to the wrong number of arguments."""


class RewriteBudgetExceeded(AccLabError):
    """Normalization did not terminate within the configured step budget."""


class EvaluationRefused(AccLabError):
    """A formula lies outside the guarded fragment the evaluator supports."""


class StateCapExceeded(AccLabError):
    """Trace enumeration visited more states than allowed."""


class SpecError(AccLabError):
    """A protocol, case test or accountability spec is ill-formed."""


class ParseError(AccLabError):
    """Syntax or resolution error with a source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"{self.source or '<input>'}:{self.line}:{self.column}"
        return f"{where}: {self.message}"
