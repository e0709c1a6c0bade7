"""Exception types raised by the library and mapped to CLI exit codes."""


class InvalidArgumentError(ValueError):
    """A caller-supplied argument violates a precondition."""


class ParseError(ValueError):
    """Malformed input file.

    ``row`` and ``column`` are 1-based locations when known.
    """

    def __init__(self, message, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class DivergenceError(ArithmeticError):
    """An iterative solver left its stable regime."""


class DuplicateEntryWarning(UserWarning):
    """A dataset listed the same cell more than once; the last value was kept."""
