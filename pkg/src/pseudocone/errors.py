"""Exception hierarchy shared by all modules."""


class PseudoconeError(Exception):
    """Base class for errors raised by this package."""


class InputError(PseudoconeError, ValueError):
    """Malformed or invalid input (bad matrix, bad file, bad argument)."""


class AlistError(InputError):
    """Parse error in an alist file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GuardExceeded(PseudoconeError, RuntimeError):
    """A brute-force or enumeration size guard would be exceeded."""


class LpError(PseudoconeError, RuntimeError):
    """The LP solver failed (numerical trouble or an unexpected status)."""
