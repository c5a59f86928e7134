"""Exception hierarchy shared by every module of the package."""


class LevyExchangeError(Exception):
    """Base class for all package errors."""


class DomainError(LevyExchangeError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConstraintError(LevyExchangeError, ValueError):
    """A structural constraint between parameters cannot be satisfied.

    ``residual`` carries the size of the violation when it is measurable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalError(LevyExchangeError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""

    def __init__(self, message, partial=None, nodes=None):
        super().__init__(message)
        self.partial = partial
        self.nodes = nodes


class SeriesOverflowError(NumericalError, OverflowError):
    """A finite sum overflowed; ``term_index`` names the offending term."""

    def __init__(self, message, term_index):
        super().__init__(message)
        self.term_index = term_index


class NumericalStabilityWarning(UserWarning):
    """Emitted when a formula is used in a regime known to be fragile."""
