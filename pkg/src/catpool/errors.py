"""Exception types shared across the package.

Plain argument errors raise :class:`ValueError` directly; the classes here
mark conditions the CLI maps to distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid experiment configuration (bad field value, missing key)."""


class DataError(ValueError):
    """Unusable input data (missing columns, unreadable file, bad schema)."""


class DegeneratePoolError(ValueError):
    """Pool with no coverage: every expected layer loss is zero (0/0 share)."""


class EstimationError(ValueError):
    """Estimator left its domain (e.g. zero Hill spacings imply infinite alpha)."""
