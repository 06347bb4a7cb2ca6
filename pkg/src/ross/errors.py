"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: ConfigError -> 2 (usage),
FormatError -> 3, DataError and subclasses -> 4.
"""


class RossError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RossError):
    """Invalid parameter or configuration value (non-positive sizes, bad keys)."""


class FormatError(RossError):
    """Malformed on-disk artifact (truncation, bad header, out-of-range values)."""


class DataError(RossError):
    """Input data violates an operation's precondition."""


class TrajectoryRangeError(DataError):
    """Queried timestamp lies outside the trajectory's time span."""


class DegenerateGeometryError(DataError):
    """Geometric configuration admits no unique solution (e.g. collinear targets)."""


class InsufficientDataError(DataError):
    """Too few samples to run the operation."""


class InsufficientHistoryError(DataError):
    """Fewer frames available than the requested temporal stack depth."""


class EmptyEvaluationError(DataError):
    """Evaluation covered zero pixels or left every class undefined."""
