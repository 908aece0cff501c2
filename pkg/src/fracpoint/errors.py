"""Exception hierarchy shared by the solvers and the command-line front-end."""


class FracPointError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FracPointError, ValueError):
    """A point lies on the boundary of, or outside, the open unit square."""


class ConfigurationError(FracPointError, ValueError):
    """Inconsistent discretization or problem parameters."""


class AssumptionViolation(FracPointError, ValueError):
    """A structural hypothesis on the nonlinearity or the reaction coefficient fails."""


class NumericalError(FracPointError, RuntimeError):
    """A linear system could not be solved reliably."""


class SolverError(FracPointError, RuntimeError):
    """Newton iteration failed to converge.

    The residual history is kept on ``history`` for diagnostics.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
