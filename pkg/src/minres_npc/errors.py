"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible lengths or shapes."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ZeroRHSError(ValueError):
    """The right-hand side is the zero vector, so ``x = 0`` is already optimal."""


class NumericalFailure(ArithmeticError):
    """An iteration produced an internally inconsistent or non-finite value."""


class ParseError(ValueError):
    """A text file could not be parsed.

    The message always carries the offending path and line number.
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + message)


class LineSearchError(RuntimeError):
    """Backtracking exhausted its budget without satisfying sufficient decrease."""

    def __init__(self, message, evaluations):
        super().__init__(message)
        self.evaluations = evaluations
