"""Exception types raised across the package."""


class PoleError(ValueError):
    """Evaluation requested exactly at (or too close to) a pole."""


class DomainError(ValueError):
    """Argument outside the domain of the operation."""


class PointAtInfinityError(DomainError):
    """The Moebius map sends w = 1 to the point at infinity."""


class AccuracyError(RuntimeError):
    """A numerical procedure could not reach its accuracy target.

    ``achieved`` carries the best error estimate that was reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConvergenceError(RuntimeError):
    """An iterative method exhausted its iteration budget."""


class SamplerQualityError(RuntimeError):
    """Too many pole-proximity rejections while sampling boundary values."""


class FitError(ValueError):
    """A distribution fit was requested on unsuitable data."""
