"""Exception types raised by the PeriodicSIS library"""

__all__ = ["ScheduleError", "ConvergenceError", "InfeasibleError"]


class ScheduleError(ValueError):
    """Malformed or invalid schedule, state vector or input file."""


class ConvergenceError(ArithmeticError):
    """An iterative method hit its cap or a numerical self-check failed."""


class InfeasibleError(ValueError):
    """A control request cannot be met, e.g. an invalid gain bracket."""
