"""Exception types shared across the package.

The CLI maps these onto exit codes: parse/validation/configuration
problems exit 1, I/O problems (plain OSError) exit 2.
"""


class SeaqualError(Exception):
    """Base class for errors raised by this package."""


class ParseError(SeaqualError):
    """Malformed input that could not be read (names line/column where known)."""


class ValidationError(SeaqualError):
    """Input was readable but violates a documented invariant."""


class ConfigError(SeaqualError):
    """Inconsistent or unsupported configuration."""
