"""Exception types shared across the package."""


class DegenerateProtocolError(ValueError):
    """The protocol has zero signal slope, so the moment error is undefined."""


class DomainError(ValueError):
    """A parameter lies outside the region where a formula or protocol is defined."""


class TruncationError(ValueError):
    """A truncated Fock space is too small for the requested coherent state."""
