"""Exception types shared across the package."""

from __future__ import annotations


class GammaGlmError(Exception):
    """Base class for all package-specific errors."""


class NumericalOverflowError(GammaGlmError):
    """A kernel or gradient evaluated to a non-finite value.

    Carries the index of the offending sample within the batch.
    """

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index


class SeriesTruncationError(GammaGlmError):
    """A pmf-power series did not converge within the term cap."""

    def __init__(self, message: str, mu: float, gamma: float):
        super().__init__(message)
        self.mu = mu
        self.gamma = gamma


class InvalidScheduleError(GammaGlmError):
    """A step-size schedule produced a degenerate stopping distribution."""


class InvalidTrimError(GammaGlmError):
    """A trimming fraction left no observations to average."""


class CsvParseError(GammaGlmError):
    """A CSV file could not be parsed into a dataset.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line
