"""Exception hierarchy and the CLI exit codes attached to it."""

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_VERIFICATION = 3
EXIT_TOLERANCE = 4


class ModsteinError(Exception):
    exit_code = 1


class HypothesisError(ModsteinError, ValueError):
    """Inputs fall outside the range where a statement or routine applies."""

    exit_code = EXIT_HYPOTHESIS


class VerificationError(ModsteinError):
    """A checked inequality or identity failed."""

    exit_code = EXIT_VERIFICATION


class ToleranceNotMet(ModsteinError, ArithmeticError):
    """A numerical routine could not reach the requested accuracy.

    ``best_estimate`` carries whatever the routine had when it gave up.
    """

    exit_code = EXIT_TOLERANCE

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class BracketError(HypothesisError):
    pass


class CutoffError(ToleranceNotMet):
    pass


class RangeError(HypothesisError):
    pass
