"""Fundamental cones, pseudo-weights and LP decoding for binary linear codes."""

from pseudocone.errors import (
    AlistError,
    GuardExceeded,
    InputError,
    LpError,
    PseudoconeError,
)

__version__ = "0.1.0"

__all__ = [
    "AlistError",
    "GuardExceeded",
    "InputError",
    "LpError",
    "PseudoconeError",
    "__version__",
]
