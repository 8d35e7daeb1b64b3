"""Exception hierarchy shared by all estimation modules."""


class MixcensError(Exception):
    """Base class for errors raised by this package."""


class InvalidObservationError(MixcensError, ValueError):
    """An observation violates the (U, delta, Y) construction."""


class ModelDegeneracyError(MixcensError, ValueError):
    """A category has zero probability, so its conditional density is undefined."""


class QuadratureError(MixcensError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, *, value=None, abserr=None, interval=None):
        super().__init__(message)
        self.value = value
        self.abserr = abserr
        self.interval = interval


class InsufficientDataError(MixcensError, ValueError):
    """The dataset lacks observations an estimator needs.

    ``category`` names the missing category (1, 2 or 3) when applicable.
    """

    def __init__(self, message, *, category=None):
        super().__init__(message)
        self.category = category


class WindowExceededError(MixcensError, ValueError):
    """A time lies beyond the estimation window [0, tau]."""


class EstimationError(MixcensError, RuntimeError):
    """An optimizer failed to converge or the data are degenerate."""

    def __init__(self, message, *, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
