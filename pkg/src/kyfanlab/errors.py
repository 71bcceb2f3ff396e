"""Exception types shared across the lab."""

from __future__ import annotations


class KyfanLabError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(KyfanLabError):
    """A model specification is structurally invalid.

    ``field`` names the offending field so callers can point at it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class StationarityError(KyfanLabError):
    """An operation requiring weak stationarity was applied to a model
    that does not provide it (e.g. a contraction orbit)."""


class HorizonError(KyfanLabError):
    """A covariance-table model was queried at a lag beyond its horizon."""


class PreconditionError(KyfanLabError):
    """A check's hypothesis failed at the queried arguments.

    Distinct from a check failure: the inequality was never evaluated
    because its standing assumption does not hold there.
    """


class UndefinedRatioError(KyfanLabError):
    """The three-point ratio statistic is undefined (zero denominator)."""


class SeriesFormatError(KyfanLabError):
    """A report without a schedule-indexed series was asked for CSV output."""


class ConfigError(KyfanLabError):
    """Command-line or run-configuration error."""
