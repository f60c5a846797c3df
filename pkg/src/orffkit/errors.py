"""Exception hierarchy shared by every orffkit module."""


class OrffError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(OrffError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(OrffError, NotImplementedError):
    """The requested operation is not defined for this kernel family."""


class DegenerateInputError(InvalidParameterError):
    """Inputs make a formula singular (e.g. a zero variance proxy inside a log)."""


class SingularSystemError(OrffError, ArithmeticError):
    """A linear system has no unique solution."""


class ConvergenceError(OrffError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Relative residual at the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepSizeError(ConvergenceError):
    """Stochastic gradient descent diverged; the base step is too large."""


class ResourceError(OrffError, MemoryError):
    """A dense computation would exceed the configured size guard."""
