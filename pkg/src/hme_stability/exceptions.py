"""Exception hierarchy shared by all modules."""


class HMEError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(HMEError, ValueError):
    """Invalid dimension, order, model parameter or quadrature setting."""


class StateError(HMEError, ValueError):
    """Moment state violating rho > 0 or theta > 0."""


class UnsupportedError(HMEError, NotImplementedError):
    """Combination of options that is deliberately not implemented."""


class NumericalError(HMEError, RuntimeError):
    """An eigen- or linear solver failed to produce a usable answer."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class DegeneratePencilError(NumericalError):
    """Every root of a matrix pencil was classified as infinite."""
