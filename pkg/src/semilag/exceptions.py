"""Exception types raised across the package."""


class SemilagError(Exception):
    """Base class for all package errors."""


class DimensionError(SemilagError, ValueError):
    """Array shapes do not agree with the declared problem dimension."""


class InvalidInstanceError(SemilagError, ValueError):
    """An instance failed validation and cannot be processed."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid instance")


class NonSymmetricError(SemilagError, ValueError):
    pass


class NonFiniteError(SemilagError, ValueError):
    pass


class InfeasibleError(SemilagError):
    """The feasible set is empty."""


class UnboundedError(SemilagError):
    """A set required to be bounded is not."""


class TooLargeError(SemilagError, ValueError):
    """Problem exceeds the exhaustive-enumeration size limit."""


class PreconditionError(SemilagError):
    """A mathematical precondition of an operation does not hold."""


class WeakDualityError(SemilagError):
    """Dual bound exceeds the primal value beyond tolerance (a solver bug)."""


class KindMismatchError(SemilagError, TypeError):
    """Instance kind is not accepted by the requested command."""
