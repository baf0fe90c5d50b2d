"""Exception types raised across the package."""


class SailOrbitsError(Exception):
    """Base class for all package errors."""


class DegenerateGeometryError(SailOrbitsError):
    """Sail normal or expansion constants are undefined at the given geometry."""


class NotConservedError(SailOrbitsError):
    """A Jacobi-type constant was requested for a non-conservative force model."""


class NoConvergenceError(SailOrbitsError):
    """An iterative solve hit its iteration cap."""


class SingularJacobianError(SailOrbitsError):
    pass


class OrderMismatchError(SailOrbitsError):
    """Series operands carry different truncation orders."""


class ConvergenceDomainError(SailOrbitsError):
    """Legendre expansion evaluated outside rho/D < 1."""


class StructureViolationError(SailOrbitsError):
    """Eigenvalues do not follow the saddle x center x center pattern."""


class SingularOmegaStarError(SailOrbitsError):
    pass


class ZeroNormalizationComponentError(SailOrbitsError):
    pass


class IllConditionedError(SailOrbitsError):
    pass


class ResidualTooLargeError(SailOrbitsError):
    pass


class StepSizeUnderflowError(SailOrbitsError):
    pass


class MaxStepsExceededError(SailOrbitsError):
    pass
