"""Exception hierarchy shared across the package."""


class FuncRegError(Exception):
    """Base class for all package errors."""


class DependentInput(FuncRegError):
    pass


class NotIdentifiable(FuncRegError):
    """Raised when ``D`` intersects the orthogonal complement of the data space."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NotInSubspace(FuncRegError):
    pass


class RankDeficient(FuncRegError):
    def __init__(self, message, replicate=None):
        super().__init__(message)
        self.replicate = replicate


class SingularCovariance(FuncRegError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class UnsupportedProcess(FuncRegError):
    pass


class BadTruncation(FuncRegError):
    pass


class DegenerateEigenvalue(FuncRegError):
    pass


class AssumptionViolated(FuncRegError):
    pass


class NotNested(FuncRegError):
    pass


class BadDimension(FuncRegError):
    pass


class BadSchedule(FuncRegError):
    pass


class ConfigError(FuncRegError):
    pass


class IoError(FuncRegError):
    """An output artifact could not be written or read back."""
