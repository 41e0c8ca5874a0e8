"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 2, regime
violations exit 3, numerical failures exit 4.
"""


class RegimeError(ValueError):
    """A requested computation falls outside its regime of validity.

    Carries the violated condition (e.g. ``"d < 2 + alpha"``) so callers can
    report which constraint was broken.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BudgetError(ValueError):
    """Problem size exceeds the documented computational budget."""


class FactorizationError(RuntimeError):
    """Covariance factorization failed even after the jitter policy.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue of the offending matrix.
    """

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
