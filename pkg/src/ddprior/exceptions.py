"""Exception hierarchy shared by the library and the command line."""


class DDPriorError(Exception):
    """Base class for all errors raised by :mod:`ddprior`."""


class NetworkError(DDPriorError):
    """Structural problem with a belief net (cycle, unknown parent, ...)."""


class DataError(DDPriorError):
    """A data record is incomplete or carries a label outside a domain.

    ``row`` is the zero-based record index and ``column`` the offending
    column name, when known.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class PriorSpecError(DDPriorError):
    """Invalid prior hyperparameters."""


class QuadratureError(DDPriorError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SolverError(DDPriorError):
    """The weight solver rejected its input or failed its optimality check."""


class PreconditionError(DDPriorError):
    """An operation was called outside the hypotheses it relies on."""
