class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative evaluation did not reach its tolerance."""


class NumericError(ArithmeticError):
    """A linear system is singular or too ill-conditioned to trust."""
