"""Cascade random-forest screening of bathing-water quality measurements."""

__version__ = "0.1.0"

from .errors import ConfigError, ParseError, SeaqualError, ValidationError

__all__ = [
    "__version__",
    "SeaqualError",
    "ParseError",
    "ValidationError",
    "ConfigError",
]
