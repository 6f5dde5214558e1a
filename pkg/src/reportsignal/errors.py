"""Exception hierarchy for the pipeline.

Three branches map onto CLI exit codes: ConfigurationError -> 1,
DataError -> 2, NumericalError -> 3.
"""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(PipelineError):
    """Bad configuration file, bad CLI arguments, or unusable run setup."""


class DataError(PipelineError):
    """Input data violates a documented contract."""


class SchemaError(DataError):
    """A file header or field layout does not match the documented schema."""


class GapError(DataError):
    """A required observation is missing from a series."""

    def __init__(self, series: str, date, message: str | None = None):
        self.series = series
        self.date = date
        super().__init__(message or f"missing observation for {series} on {date}")


class MappingError(DataError):
    """A stock has no industry mapping."""


class HistoryError(DataError):
    """Not enough lookback history to compute a windowed quantity."""


class DomainError(DataError):
    """A value lies outside the mathematical domain of an operation."""


class CalendarRangeError(DataError):
    """A date falls outside the span of the trading calendar."""


class ArgumentError(DataError):
    """An operation was invoked with unusable inputs (empty pool, n <= k, ...)."""


class NumericalError(PipelineError):
    """A numerical procedure could not produce a trustworthy result."""


class SingularityError(NumericalError):
    """The regression design matrix is rank deficient."""

    def __init__(self, columns, message: str | None = None):
        self.columns = list(columns)
        cols = ", ".join(self.columns) or "<unknown>"
        super().__init__(message or f"rank-deficient design matrix; offending columns: {cols}")
