"""Exception hierarchy shared by all hetverify modules."""


class HetVerifyError(Exception):
    """Base class for errors raised by hetverify."""


class ParameterError(HetVerifyError, ValueError):
    """A parameter lies outside its admissible range."""


class ValidationError(HetVerifyError, ValueError):
    """An input object (state, matrix, file) violates its invariants."""


class TruncationError(HetVerifyError):
    """The Fock truncation is too small for the requested accuracy.

    The measured norm deficit is available as ``deficit``.
    """

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


class NumericalError(HetVerifyError, ArithmeticError):
    """A computation produced a non-finite value (overflow or NaN)."""
