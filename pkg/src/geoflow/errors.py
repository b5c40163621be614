"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the CLI exit code it maps to, so the command-line front end
can translate failures without a lookup table.
"""


class GeoflowError(Exception):
    """Base class for all errors raised by geoflow."""

    exit_code = 2


class InvalidArgumentError(GeoflowError, ValueError):
    exit_code = 1


class UnsupportedModelError(GeoflowError, ValueError):
    exit_code = 1


class PointCloudIOError(GeoflowError, OSError):
    """Parse or read failure; ``row`` and ``col`` are 1-based when known."""

    exit_code = 3

    def __init__(self, message, row=None, col=None):
        if row is not None:
            message = f"{message} (row {row}, column {col})"
        super().__init__(message)
        self.row = row
        self.col = col


class DegenerateGraphError(GeoflowError):
    """A kernel row or extension row carries no mass at the chosen bandwidth."""


class NumericalConsistencyError(GeoflowError):
    pass


class EigensolverError(GeoflowError):
    pass


class SpectrumViolationError(GeoflowError):
    pass


class FunctionDomainError(GeoflowError):
    pass


class DegenerateStateError(GeoflowError):
    pass


class EmptySupportError(GeoflowError):
    pass
