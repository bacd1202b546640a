"""Exception hierarchy shared by every module of the package."""


class GeckoError(Exception):
    """Base class for all package errors."""


class InputError(GeckoError, ValueError):
    """An argument violates a documented precondition."""


class FormatError(GeckoError):
    """A pulse file could not be parsed or failed validation."""


class NumericalError(GeckoError):
    """A linear-algebra routine did not converge."""


class BudgetError(GeckoError):
    """A requested evaluation exceeds an explicit resource cap."""


class DegenerateStepError(GeckoError):
    """The kernel direction has zero norm, so no step can be formed."""


class StepRejectedError(GeckoError):
    """A step produced an invalid pulse (e.g. a non-positive duration)."""


class RestoreFailedError(GeckoError):
    """Fidelity restoration ran out of budget.

    The best pulse seen is attached as ``pulse`` together with its fidelity.
    """

    def __init__(self, message, pulse=None, fidelity=None):
        super().__init__(message)
        self.pulse = pulse
        self.fidelity = fidelity
