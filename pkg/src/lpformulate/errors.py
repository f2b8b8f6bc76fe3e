"""Exception hierarchy shared across the toolkit.

Data problems (bad records, unresolvable names, solver misuse) all derive
from ToolkitError so callers can distinguish them from genuine I/O or
programming errors.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all data-level errors raised by this package."""


class MalformedJson(ToolkitError):
    """Input text is not syntactically valid JSON."""


class SchemaViolation(ToolkitError):
    """A record is valid JSON but violates the IR schema."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class UnparseableQuantity(ToolkitError):
    """A quantity string could not be interpreted as an exact rational."""


class UnresolvedVariable(ToolkitError):
    """A declaration references a name that maps to no known variable."""


class DegenerateRow(ToolkitError):
    """A lowered constraint has an all-zero coefficient vector and is
    trivially false (all-zero rows that hold trivially are kept, flagged)."""


class MultiObjectiveUnsupported(ToolkitError):
    """The solver and LP emitter accept exactly one objective."""


class DimensionMismatch(ToolkitError):
    """Rows or objectives disagree with the variable order length."""


class BoxTooLarge(ToolkitError):
    """Brute-force enumeration box exceeds the point budget."""


class LpSyntaxError(ToolkitError):
    """LP-format text outside the supported subset."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyDataset(ToolkitError):
    """Aggregation requested over zero gold declarations."""


class MissingGold(ToolkitError):
    """A beam refers to a corpus record that carries no gold formulation."""


class OrphanBeam(ToolkitError):
    """A beam line has no (unique) matching corpus record."""


class NotEligible(ToolkitError):
    """An augmentation was requested on a formulation that does not
    satisfy its precondition."""


class ServiceUnavailable(ToolkitError):
    """The generation service kept failing at the transport level."""


class EmptyGeneration(ToolkitError):
    """The generation service returned no usable text after retries."""
