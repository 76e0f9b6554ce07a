"""Exception types shared across the package."""

from __future__ import annotations


class ChoiceRankError(Exception):
    """Base class for all package-specific errors."""


class ParseError(ChoiceRankError):
    """A file violates its documented format.

    Carries the offending path and, when known, the 1-based line number.
    """

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class ModelInconsistencyError(ChoiceRankError):
    """Input data contradicts the choice model.

    The canonical case: a node with positive outgoing traffic but no
    outgoing edges, for which no choice distribution exists.
    """


class SinkEncountered(ChoiceRankError):
    """A simulated trajectory reached a node with no outgoing edges
    while early stopping was disallowed."""
