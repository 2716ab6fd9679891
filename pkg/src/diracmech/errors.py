"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(EngineError):
    """An argument has the wrong length or shape for the operation."""


class NumericDomainError(EngineError):
    """Evaluation left the real domain (log of a negative, 0 division, ...)."""


class SingularMatrixError(EngineError):
    """A matrix is singular to working precision."""


class NonConvergenceError(EngineError):
    """An iteration hit its step limit; ``residual`` holds the last norm."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ValidationError(EngineError):
    """Inconsistent or ill-formed input data."""


class BindingError(EngineError):
    """An expression references a variable with no bound value."""


class ExprError(EngineError):
    """Lexing or parsing failed; ``offset`` is the byte position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class CatalogError(EngineError):
    """Unknown system name or parameter."""


class UnsupportedError(EngineError):
    """The requested feature is not available for this system."""


class DegenerateParameterError(EngineError):
    """A closed form divides by a parameter combination that is zero."""


class DegenerateHamiltonianError(EngineError):
    """The transverse momentum block of the Hamiltonian is singular, so the
    dynamics does not reduce to a vector field on the effective phase space."""


class TruncatedTrajectoryError(EngineError):
    """Integration failed mid-run; carries the partial trajectory."""

    def __init__(self, message, partial, failed_time):
        super().__init__(message)
        self.partial = partial
        self.failed_time = failed_time
