"""Exception hierarchy; the CLI maps these onto exit codes."""


class SupercritError(Exception):
    pass


class DomainError(SupercritError, ValueError):
    """Input outside the mathematical domain of an operation (exit code 1)."""


class NumericalError(SupercritError, RuntimeError):
    """A numerical procedure failed to converge or lost precision (exit code 2)."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class HorizonError(NumericalError):
    """Shooting did not reach v = 0 within the step budget."""


class PrecisionError(NumericalError):
    """Double precision overflowed; retry in paired-double mode."""


class MatchingError(NumericalError):
    """Outward extension of a singular approximant failed to decrease."""
