"""Exception types raised by the solver and its helpers."""


class InvalidDimensionError(ValueError):
    """A matrix dimension was zero, negative or inconsistent."""


class InvalidParameterError(ValueError):
    pass


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed."""


class PreconditionError(ValueError):
    pass


class NumericError(ArithmeticError):
    """Non-finite input, or an intermediate quantity that should be positive was not."""


class ConvergenceError(RuntimeError):
    """The secular root finder ran out of iterations.

    With the safeguarded iteration this indicates a bug, so the offending
    brackets are carried along for diagnosis.
    """

    def __init__(self, message, brackets=None):
        super().__init__(message)
        self.brackets = brackets
