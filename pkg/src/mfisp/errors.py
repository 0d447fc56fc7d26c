"""Exception hierarchy shared by all modules."""


class MfispError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MfispError, ValueError):
    """Argument outside the mathematical or supported domain."""


class UsageError(MfispError, ValueError):
    """Inconsistent inputs (shapes, index ranges, grids)."""


class ConvergenceError(MfispError, ArithmeticError):
    """An iteration hit its cap without converging."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class VanishingSingularValueError(MfispError, ArithmeticError):
    """Division by a numerically vanishing singular value was requested."""


class PlanError(MfispError):
    """A frequency plan violates its construction contract."""


class SimulationError(MfispError):
    """Forward simulation failed or violated a strict precondition."""


class SolveError(MfispError, ArithmeticError):
    """The block system could not be solved reliably."""

    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins


class StageError(MfispError):
    """Failure of one pipeline stage ("plan", "simulate" or "reconstruct")."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.cause = cause
