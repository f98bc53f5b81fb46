"""Exception types raised across the pipeline.

Every failure mode that callers are expected to handle gets its own class so
that tests and the CLI can match on type rather than message text.
"""

from __future__ import annotations


class PrismError(Exception):
    """Base class for all pipeline errors."""


class ParseError(PrismError):
    """Input file is malformed (bad header, non-numeric row, unknown format)."""


class ValidationError(PrismError):
    """Parsed values violate a contract (non-positive sample, bad config value)."""


class TooShortError(PrismError):
    """Trace does not cover the minimum number of analysis windows."""


class WindowTooSmallError(PrismError):
    """Window length times sampling rate yields too few samples per window."""


class CoverageError(PrismError):
    """Ground truth does not span the trace's window plan."""


class TooFewSamplesError(PrismError):
    """Not enough samples to fit a smoothing spline."""


class NumericalError(PrismError):
    """A linear solve failed or produced non-finite values."""


class BaselineNonPositiveError(PrismError):
    """A fitted channel baseline touched zero or went negative."""


class DegenerateProjectionError(PrismError):
    """A projection input is degenerate (zero-variance denominator signal)."""


class EmptyBandError(PrismError):
    """No spectrum bin falls inside the requested frequency band."""


class ZeroPowerError(PrismError):
    """Signal has no power off DC; spectral quantities are undefined."""


class TooFewWindowsError(PrismError):
    """Fewer than two windowed estimates; temporal variation is undefined."""


class AlignmentError(PrismError):
    """Predicted and reference series disagree in length or midpoint times."""


class EmptyInputError(PrismError):
    """An input collection (series, corpus directory) is empty."""


class AllCandidatesFailedError(PrismError):
    """Every (lambda, alpha) candidate in the grid raised; nothing to select."""


class SpecError(PrismError):
    """Synthetic-trace specification is invalid or physically implausible."""
