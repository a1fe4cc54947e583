"""Exception hierarchy shared by all oprisklab modules."""


class OpRiskError(Exception):
    """Base class for all errors raised by oprisklab."""


class DomainError(OpRiskError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(OpRiskError, ValueError):
    """A structural precondition (sample size, sortedness, ...) is violated."""


class ConfigError(OpRiskError, ValueError):
    """A run configuration is internally inconsistent or has unknown keys."""


class NumericalError(OpRiskError, ArithmeticError):
    """A numerical routine failed to converge or overflowed its guard."""


class FitError(OpRiskError, ValueError):
    """A sample is too degenerate to fit (for example zero interquartile range)."""
