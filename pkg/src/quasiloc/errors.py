"""Exception types shared across the package."""


class QuasilocError(Exception):
    """Base class for all errors raised by quasiloc."""


class DomainError(QuasilocError, ValueError):
    """An argument lies outside the domain of the operation."""


class TruncationError(DomainError):
    """A region would leave the finite truncation box."""


class DivergenceError(DomainError):
    """A lattice sum that should be certified is not finite for these parameters."""


class GeometryInfeasibleError(DomainError):
    """No admissible cone geometry exists for the requested configuration."""


class IntegrationError(QuasilocError, RuntimeError):
    """The time stepper could not reach the requested accuracy."""

    def __init__(self, message, *, t=None, step=None, error=None):
        super().__init__(message)
        self.t = t
        self.step = step
        self.error = error


class BlockStructureError(QuasilocError):
    """An operator does not respect the charge sectors of a block backend."""


class StageError(QuasilocError):
    """A sub-stage of the factorization pipeline failed."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
