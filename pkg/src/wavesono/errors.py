"""Exception types shared across the toolkit.

ValidationError covers bad inputs caught before any compute (exit code 2 in
the CLI); NumericalError covers mid-run failures such as unstable time steps
or non-finite fields (exit code 3).
"""


class ValidationError(ValueError):
    """Input, configuration, or file-format precondition failed."""


class NumericalError(RuntimeError):
    """A numerical computation blew up or produced non-finite values."""


class CflViolationError(ValidationError):
    """Requested time step exceeds the stability bound for the model."""
