"""Exception types raised across the package."""


class PcmapError(Exception):
    """Base class for analysis errors (CLI exit status 1)."""


class DomainError(PcmapError, ValueError):
    """A point lies outside [0, 1]."""


class ResourceBudgetError(PcmapError):
    """An exact computation exceeded its configured budget."""


class MapValidationError(PcmapError):
    """Raised when a map fails validation; carries the full report."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.violations) or "invalid map")


class MapSpecSyntaxError(PcmapError):
    """Malformed map-spec text, with 1-based line and column."""

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class BasePointError(PcmapError):
    """No admissible base point was found within the skip budget."""


class InjectivityError(PcmapError):
    """Two sample points of one piece share an image."""


class MeasureMismatchError(PcmapError):
    """An empirical measure was not produced by the given map."""
