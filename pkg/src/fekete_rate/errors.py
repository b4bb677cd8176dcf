"""Exception types raised across the package."""


class FeketeRateError(Exception):
    """Base class for all package errors."""


class InvalidInput(FeketeRateError, ValueError):
    """Arguments violate a documented precondition."""


class PoleError(FeketeRateError, ValueError):
    """The Green function was evaluated on the diagonal."""


class ConvergenceError(FeketeRateError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last sup-norm update of the iteration.
    iterations : int
        Number of sweeps performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleError(FeketeRateError, ValueError):
    """The region cannot hold the requested number of separated points."""


class CalibrationError(FeketeRateError, RuntimeError):
    """Riemann-constant calibration produced inconsistent estimates."""


class ConditioningError(FeketeRateError, ArithmeticError):
    """A Gram matrix is numerically singular.

    Attributes
    ----------
    condition : float
        Estimated 2-norm condition number.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class PerturbationError(FeketeRateError, RuntimeError):
    """No admissible replacement point was found for the theta perturbation.

    Attributes
    ----------
    theta_values : list of float
        Theta norms encountered during the search.
    """

    def __init__(self, message, theta_values=()):
        super().__init__(message)
        self.theta_values = list(theta_values)
