"""
Errors - Exception types shared by the analyzer and the CLI exit-code mapping
"""


class RSPError(Exception):
    """Base class for all analyzer errors."""


class InputError(RSPError, ValueError):
    """Rejected input: non-finite numbers, bad axes, malformed files."""


class ConvergenceError(RSPError):
    """A numerical procedure did not reach its tolerance."""


class ValidationFailure(RSPError):
    """One or more validation checks failed."""


# CLI exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_VALIDATION_FAILURE = 2
EXIT_NOT_CONVERGED = 3
