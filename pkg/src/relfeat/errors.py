"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied data or arguments."""


class ParseError(InputError):
    """A text file could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class FormatError(ParseError):
    """A feature or model file violates its declared layout."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
