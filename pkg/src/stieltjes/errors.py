"""Exception types shared across the library."""


class StieltjesError(Exception):
    """Base class for every error raised by this package."""


class DomainError(StieltjesError, ValueError):
    """An argument lies outside the working interval or violates a precondition."""


class SpecValidationError(StieltjesError, ValueError):
    """A JSON input failed validation.

    ``path`` points at the offending field (e.g. ``segments[2].profile.slope``).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class QuadratureError(StieltjesError, RuntimeError):
    """Adaptive quadrature hit its refinement cap before reaching tolerance.

    Carries the best value computed so far and the achieved error estimate.
    """

    def __init__(self, message: str, estimate: float, error_estimate: float):
        self.estimate = estimate
        self.error_estimate = error_estimate
        super().__init__(f"{message} (estimate={estimate!r}, error={error_estimate!r})")


class UndefinedPointError(StieltjesError, ValueError):
    """The g-derivative is not defined at the requested point."""


class ConvergenceError(StieltjesError, RuntimeError):
    """An iterative estimate stopped improving before reaching tolerance."""

    def __init__(self, message: str, last_estimate):
        self.last_estimate = last_estimate
        super().__init__(message)


class DegenerateCoefficientError(StieltjesError, ValueError):
    """A jump factor 1 + c(t)*delta vanished where a nonzero factor is required."""


class HorizonSelectionError(StieltjesError, RuntimeError):
    """No positive horizon satisfies the requested domination bound."""


class RhsEvaluationError(StieltjesError, RuntimeError):
    """A system right-hand side failed to evaluate at the requested state."""
