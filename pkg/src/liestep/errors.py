"""Exception hierarchy for liestep."""


class LiestepError(Exception):
    """Base class for all liestep errors."""


class ValidationError(LiestepError):
    """A value violates a documented invariant (named in the message)."""


class ParseError(LiestepError):
    """A config or trajectory file could not be parsed."""


class SchemaMismatchError(LiestepError):
    """A persisted file does not match the expected schema/header."""


class IoError(LiestepError):
    """Reading or writing a file failed."""


class BranchCutError(LiestepError):
    """A rotation left the principal-logarithm chart.

    Raised when some rotation angle exceeds pi minus the branch margin;
    usually means the time step is too large for the chart being used.
    """


class SingularOperatorError(LiestepError):
    """A linear operator that should be invertible was (numerically) singular."""


class SingularMatrixError(LiestepError):
    """A matrix that must be nonsingular was singular."""


class DegenerateInertiaError(LiestepError):
    """The inertia operator cannot be inverted (some pair sum is ~ 0)."""


class NewtonDivergenceError(LiestepError):
    """An implicit solve did not reach tolerance within the iteration budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnsupportedDimensionError(LiestepError):
    """The operation is only implemented for a specific matrix dimension."""


class TrajectoryError(LiestepError):
    """A solver error occurred while advancing a trajectory.

    Carries the step index at which the underlying error was raised.
    """

    def __init__(self, message, step, cause=None):
        super().__init__(message)
        self.step = step
        self.cause = cause
