"""Exception hierarchy shared by the library and the command line."""


class KefError(Exception):
    """Base class for all kef errors."""


class ConfigError(KefError, ValueError):
    """Invalid or incomplete run configuration."""


class DomainError(KefError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(DomainError):
    """A moment or structural precondition of a residual operator is unmet."""


class NumericFailure(KefError, ArithmeticError):
    """A numerical routine did not reach its tolerance.

    Attributes:
        achieved: The error estimate that was actually reached.
    """

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved
