"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its stable exit codes: config errors exit 1,
data errors exit 2, numeric failures exit 3.
"""


class SpeechBiasError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class ConfigError(SpeechBiasError):
    """Invalid run configuration (unknown keys, bad values, missing paths)."""

    exit_code = 1


class DataError(SpeechBiasError):
    """Unreadable or contract-violating input data."""

    exit_code = 2


class NumericError(SpeechBiasError):
    """Numeric failure: non-finite values, degenerate statistics."""

    exit_code = 3


class UndefinedMetricError(NumericError):
    """A metric is undefined for the given counts (empty class cell)."""
