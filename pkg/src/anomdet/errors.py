"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract: ConfigError -> 1,
DataError -> 2, NumericError -> 3.
"""


class ConfigError(ValueError):
    """Bad or missing configuration (unknown key, unparsable value, ...)."""


class DataError(ValueError):
    """Dataset problem: missing directory, empty split, undecodable file."""


class NumericError(RuntimeError):
    """Numeric failure during training or scoring (NaN loss, divergence)."""


class ShapeError(ValueError):
    """Tensor shape mismatch; the message names the offending dimension."""
