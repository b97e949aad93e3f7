"""Exception hierarchy shared across the package.

The CLI maps these onto distinct process exit codes, so new exception
types should subclass one of the three top-level categories.
"""


class QnnffError(Exception):
    """Base class for all package errors."""


class ArgumentError(QnnffError):
    """Invalid argument: bad dimensions, indices out of range, bad config."""


class CapacityError(ArgumentError):
    """Requested problem size exceeds what the dense backend supports."""


class DataError(QnnffError):
    """Invalid or inconsistent data: missing labels, malformed files."""


class DegenerateGeometryError(DataError):
    """Geometry too degenerate for the requested internal coordinate."""


class ScalerError(DataError):
    """Feature column cannot be scaled (constant column)."""


class CheckpointError(DataError):
    """Checkpoint file is malformed or has an unsupported version."""


class NumericalError(QnnffError):
    """Computation produced non-finite or otherwise unusable numbers."""
