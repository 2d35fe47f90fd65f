"""
Exception hierarchy shared by the toolkit modules and the command line
"""

from typing import Optional, Any


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1


class ConfigurationError(ToolkitError, ValueError):
    """Invalid configuration, empty windows, malformed descriptors"""

    exit_code = 2


class InsufficientDataError(ConfigurationError):
    """A convergence window is too short to estimate a limit"""


class PreconditionError(ToolkitError):
    """A hypothesis of the requested construction does not hold (e.g. not asymptotically additive)"""

    exit_code = 3

    def __init__(self, message: str, gap: Optional[float] = None):
        super().__init__(message)
        self.gap = gap


class SolverError(PreconditionError):
    """A numerical construction could not be certified (Cauchy violation, reducible matrix)"""


class ResourceCapError(ToolkitError):
    """A pattern enumeration would exceed the configured cap"""

    exit_code = 4

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class DimensionMismatchError(ToolkitError, TypeError):
    """A vector does not belong to the representation space"""

    exit_code = 2


class SetMapEvaluationError(ToolkitError):
    """A set map evaluator failed on a particular finite subset"""

    def __init__(self, message: str, subset: Any = None):
        super().__init__(message)
        self.subset = subset
