"""Exception types shared across the package.

The CLI maps these onto its exit codes: ``UsageError`` (and its
``CapacityError`` subclass) exit with 2, ``NumericalError`` with 3.
"""


class UsageError(ValueError):
    """Caller violated a precondition (width mismatch, zero secret, bad layout...)."""


class CapacityError(UsageError):
    """Request exceeds what exact enumeration or simulation supports."""


class NumericalError(ArithmeticError):
    """A cost or gradient evaluated to a non-finite value."""
