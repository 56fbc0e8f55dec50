"""Exception hierarchy shared by all modules."""


class IpgdError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(IpgdError, ValueError):
    """Operands have incompatible or empty shapes."""


class NotSymmetricError(IpgdError, ValueError):
    pass


class NotPSDError(IpgdError, ValueError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class SingularMatrixError(IpgdError, ValueError):
    pass


class RankDeficientError(SingularMatrixError):
    """A shard matrix is not full row rank (APC is inapplicable)."""


class MatrixMarketError(IpgdError, ValueError):
    """Malformed Matrix Market file."""


class ComplexFieldError(MatrixMarketError):
    """Matrix Market file carries complex entries, which are not supported."""


class SolverInapplicableError(IpgdError):
    """The chosen algorithm cannot be run on this problem."""


class DivergenceError(IpgdError, FloatingPointError):
    """A non-finite value appeared in an iterate.

    ``iteration`` records the round at which it was detected.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class LineSearchError(IpgdError):
    pass
