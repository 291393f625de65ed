"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible Hilbert-space dimensions."""


class AmplitudeTooLargeError(ValueError):
    """Displacement amplitude too large for the Fock truncation."""


class StepSizeError(ValueError):
    """ODE step size violates the stability precondition."""


class DegenerateSteadyStateError(RuntimeError):
    """Liouvillian null space is not one-dimensional."""


class ConditioningError(RuntimeError):
    """A linear solve is too ill-conditioned to trust."""


class MemoryGuardError(RuntimeError):
    """Requested joint space exceeds the small-instance guard."""


class NumericalDegradationError(RuntimeError):
    """A state stopped satisfying the density-matrix invariants."""


class ConfigError(ValueError):
    """Invalid run configuration."""
