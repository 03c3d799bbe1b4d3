"""Exception hierarchy shared by the solver modules."""


class ShmodError(Exception):
    """Base class for all package errors."""


class NumericalFailure(ShmodError):
    """A numerical routine could not produce a trustworthy result."""


class GridError(ShmodError, ValueError):
    pass


class BracketError(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    pass


class IdentityViolation(NumericalFailure):
    """Two formulas for the same constant disagree beyond their bound."""


class SingularSystem(NumericalFailure):
    pass


class EpsOutOfRange(ShmodError, ValueError):
    pass


class QuadratureBudgetExceeded(NumericalFailure):
    pass


class DomainError(NumericalFailure):
    pass


class StepUnderflow(NumericalFailure):
    def __init__(self, message, state=None, series=None):
        super().__init__(message)
        self.state = state
        self.series = series


class UnsupportedOrder(ShmodError, ValueError):
    pass


class DegenerateData(ShmodError, ValueError):
    pass
