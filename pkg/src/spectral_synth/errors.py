class SpectralSynthError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(SpectralSynthError, ValueError):
    pass


class DisconnectedError(SpectralSynthError):
    """Raised when an operation needs a connected edge selection."""


class InfeasibleError(SpectralSynthError):
    """No feasible tree exists under the requested side constraints."""


class BudgetExceeded(SpectralSynthError):
    pass
