"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class EvgraphError(Exception):
    """Base class for all package errors."""


class ConfigError(EvgraphError):
    """Invalid configuration value, unknown key, or inconsistent settings."""


class DataError(EvgraphError):
    """Malformed or out-of-contract input data."""


class ParseError(DataError):
    """File-level parse failure; message carries position context."""


class NumericError(EvgraphError):
    """Non-finite value encountered during optimization."""


class ShapeError(EvgraphError):
    """Tensor shape mismatch; message names the operation and shapes."""


class TapeError(EvgraphError):
    """Misuse of the reverse-mode tape (non-scalar root, double backward)."""
