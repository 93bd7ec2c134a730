"""Exception hierarchy."""

import numpy as np


class PerturbkitError(Exception):
    """Base class for all errors raised by perturbkit."""


class DomainError(PerturbkitError, ValueError):
    """An eigenvalue fell outside the domain of a scalar function."""

    def __init__(self, function_name, value):
        self.function_name = function_name
        self.value = value
        super().__init__(
            f"eigenvalue {value!r} lies outside the domain of '{function_name}'"
        )


class EigenDecompositionError(PerturbkitError, np.linalg.LinAlgError):
    """The Hermitian eigensolver did not converge."""

    def __init__(self, dim, condition_estimate):
        self.dim = dim
        self.condition_estimate = condition_estimate
        super().__init__(
            f"eigensolver failed to converge (dim={dim}, "
            f"condition estimate={condition_estimate:.3e})"
        )


class InternalConsistencyError(PerturbkitError, RuntimeError):
    """A result that must be Hermitian came out asymmetric."""


class NotHermitianError(PerturbkitError, ValueError):
    pass


class NonzeroTraceError(PerturbkitError, ValueError):
    pass


class NotPositiveSemidefiniteError(PerturbkitError, ValueError):
    pass


class NotADensityMatrixError(PerturbkitError, ValueError):
    pass


class ClassificationError(PerturbkitError, ValueError):
    """A perturbation of the wrong support class was passed to an expansion."""


class InfeasiblePerturbationError(PerturbkitError, ValueError):
    """No valid perturbation could be drawn at the requested scale."""

    def __init__(self, message, feasible_scale=None):
        self.feasible_scale = feasible_scale
        super().__init__(message)


class DegenerateFitError(PerturbkitError, ValueError):
    """Too few usable points for a log-log slope fit."""
