"""Exception hierarchy."""


class PrivmacError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(PrivmacError, ValueError):
    """Dimensions of the operands do not fit together."""


class DomainError(PrivmacError, ValueError):
    """An input violates a mathematical precondition (not Hermitian, not normalized, ...)."""


class CapacityError(PrivmacError, ValueError):
    """The requested object exceeds the configured size limits."""


class SupportError(DomainError):
    """A state is not supported inside the support of the reference operator."""


class UsageError(PrivmacError, ValueError):
    """Arguments are inconsistent with each other (e.g. overlapping subsystems)."""


class SpecFormatError(PrivmacError, ValueError):
    """A channel/state spec file could not be parsed or validated."""
