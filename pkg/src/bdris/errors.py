"""Exception hierarchy shared by all bdris modules."""


class BDRISError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(BDRISError, ValueError):
    """A configuration value or argument is outside its valid range."""


class InvariantViolationError(BDRISError, ValueError):
    """An input matrix breaks a structural invariant (symmetry, unitarity)."""


class DegenerateInputError(BDRISError, ValueError):
    """The input is zero or otherwise degenerate for the requested operation."""


class RankError(BDRISError, ValueError):
    """A channel matrix is (numerically) rank deficient."""

    def __init__(self, message, singular_value=None):
        super().__init__(message)
        self.singular_value = singular_value


class NumericalError(BDRISError, ArithmeticError):
    """A numerical factorization failed to reach the required accuracy."""


class OptimizationFailure(BDRISError, RuntimeError):
    """All optimizer runs failed; ``best`` carries the best iterate seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
