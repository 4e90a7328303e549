"""Exception types shared across the toolkit."""


class VecmergeError(Exception):
    """Base class for every error raised by this package."""


class ParseError(VecmergeError):
    """A text input violates its file format.

    Carries the offending path and 1-based line number so callers can point
    at the exact spot in the file.
    """

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class DataError(VecmergeError):
    """Inputs are well-formed but violate an operation's contract."""


class NumericError(VecmergeError):
    """A numerical procedure cannot produce a usable result."""
