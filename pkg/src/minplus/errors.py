"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Matrix dimensions do not line up."""


class DomainError(ValueError):
    """An input violates a documented precondition (range, regularity, ...)."""


class RecursionGuardError(RuntimeError):
    """A recursive reduction failed to make progress."""


class HashUnavailable(RuntimeError):
    """No sum-order-preserving hash could be produced for the entry set."""
