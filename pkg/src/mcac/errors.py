"""Exception hierarchy shared by all modules."""


class MCACError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(MCACError):
    """A computation did not reach its accuracy target."""


class NonconvergedError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class SolveError(NumericalError):
    pass


class DomainError(MCACError, ValueError):
    pass


class SolvabilityError(NumericalError):
    """The right-hand side is not orthogonal to the translation mode."""

    def __init__(self, integral, tol):
        self.integral = float(integral)
        self.tol = float(tol)
        super().__init__(
            f"solvability condition violated: |int h theta0'| = {abs(self.integral):.3e} > {tol:.1e}"
        )


class GeometryError(MCACError, ValueError):
    pass


class ChartFoldError(GeometryError):
    pass


class SelfIntersectError(GeometryError):
    pass


class StepSizeError(MCACError, ValueError):
    pass


class EmptyContourError(MCACError):
    pass


class DegenerateError(MCACError, ValueError):
    pass


class EmptyInputError(MCACError, ValueError):
    pass


class ShapeMismatchError(MCACError, ValueError):
    pass


class ConfigError(MCACError, ValueError):
    """Inconsistent or out-of-range configuration."""
