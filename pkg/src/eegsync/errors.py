"""Exception taxonomy shared across the package.

The CLI maps these onto fixed exit codes (config 2, I/O 3, data 4), so
raising the right class matters for scripting.
"""


class EegsyncError(Exception):
    """Base class for all package errors."""


class ConfigError(EegsyncError):
    """Invalid or malformed configuration (bad keys, bad values)."""


class DataValidationError(EegsyncError):
    """Input data violates a documented invariant (shape, finiteness, ...)."""


class DegenerateDataError(DataValidationError):
    """Data is structurally fine but statistically degenerate (zero variance,
    all-zero differences, too few samples for the requested test)."""
