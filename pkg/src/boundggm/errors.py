"""Exception types raised across the package."""


class BoundGGMError(Exception):
    """Base class for all package errors."""


class SizeError(BoundGGMError, ValueError):
    pass


class DomainError(BoundGGMError, ValueError):
    pass


class InvalidPartitionError(BoundGGMError, ValueError):
    pass


class BasisMismatchError(BoundGGMError, ValueError):
    pass


class NormalizationError(BoundGGMError, ValueError):
    pass


class ConvergenceError(BoundGGMError, RuntimeError):
    """Iterative solver gave up; ``residual`` holds the best residual reached."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class PolicyUnsupportedError(BoundGGMError, ValueError):
    pass


class SingularPointError(BoundGGMError, ValueError):
    pass


class QuadratureError(BoundGGMError, RuntimeError):
    pass


class SpectrumDomainError(BoundGGMError, ValueError):
    pass


class IndeterminateReportError(BoundGGMError, RuntimeError):
    pass


class FeatureNotFoundError(BoundGGMError, RuntimeError):
    pass


class ScanError(BoundGGMError, RuntimeError):
    """A scan failed at a specific grid point; the whole scan is discarded."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu
