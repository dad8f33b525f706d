"""Exception hierarchy shared by the solver modules."""


class RetireGameError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RetireGameError, ValueError):
    """Parameter set violates a model assumption."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class QuadratureError(RetireGameError):
    """Quadrature failed (non-finite integrand or non-decaying tail)."""


class DivergenceError(QuadratureError):
    """Tail of a semi-infinite integral did not decay."""


class IntegrandError(QuadratureError):
    """Integrand returned NaN/inf at some abscissa."""

    def __init__(self, abscissa: float, value: float):
        self.abscissa = abscissa
        self.value = value
        super().__init__(f"integrand is {value!r} at eta={abscissa!r}")


class SolverError(RetireGameError):
    """Root bracketing or free-boundary solve failed."""


class RangeError(SolverError):
    """Requested value lies outside the numerically reachable range."""


class VerificationError(RetireGameError):
    """A certification check (HJBQV, Nash, budget) failed."""
