"""Exception hierarchy shared across the package."""


class ColdrecError(Exception):
    """Base class for all package errors."""


class DataError(ColdrecError, ValueError):
    """Malformed, misaligned or degenerate input data."""


class ParseError(DataError):
    """A CSV file could not be parsed.

    Parameters
    ----------
    path : str
        File being read.
    line : int
        1-based line number of the offending row (0 for whole-file problems).
    message : str
        What went wrong.
    """

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        where = f"{self.path}:{line}" if line else self.path
        super().__init__(f"{where}: {message}")


class AlignmentError(DataError):
    """Identifiers in one matrix do not line up with another."""


class ModelFormatError(DataError):
    """A serialized model file is unreadable or has the wrong version."""


class NumericalError(ColdrecError, ArithmeticError):
    """A linear system could not be solved (singular, non-finite)."""
