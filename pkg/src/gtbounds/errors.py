"""Exception hierarchy shared across the package."""


class GroupTestError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(GroupTestError, ValueError):
    """A parameter is outside its legal range."""


class DomainError(GroupTestError, ValueError):
    """An input is outside the domain of the operation."""


class FeasibilityError(GroupTestError):
    """The requested computation is too large for exhaustive methods."""


class ConvergenceError(GroupTestError):
    """An iterative solver hit its iteration cap; carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AbsoluteContinuityError(GroupTestError, ValueError):
    """A reference distribution has zero mass on a reachable outcome."""


class MatrixParseError(GroupTestError, ValueError):
    """A measurement-matrix file is malformed."""
