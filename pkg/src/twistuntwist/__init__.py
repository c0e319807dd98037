"""Twist-untwist phase estimation on collective spins: closed forms and exact simulation."""

__version__ = "0.1.0"

from .errors import DegenerateProtocolError, DomainError, TruncationError  # noqa: E402

__all__ = ["DegenerateProtocolError", "DomainError", "TruncationError", "__version__"]
