"""Exception types shared across the package.

The CLI maps these onto exit codes: precondition/parse problems exit 1,
numerical failures exit 2.
"""


class CoefficientError(ValueError):
    """Bad coefficient text: syntax or evaluation failure.

    ``position`` is the 1-based column of the offending character (or one
    past the end of the input for truncated expressions).
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


class PreconditionError(ValueError):
    """An operation was called outside its documented preconditions."""


class NumericalError(RuntimeError):
    """A solver failed to converge or produced an invalid result.

    ``stage`` names the computation that failed (eigensolve, bracket,
    newton, stepper, descent) so drivers can report it.
    """

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
