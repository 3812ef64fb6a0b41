"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition (shape, range, value)."""


class InsufficientDataError(ValueError):
    """Not enough samples to perform the requested operation."""


class InsufficientClassError(InsufficientDataError):
    """A class has too few samples to populate every split."""

    def __init__(self, label: int, message: str | None = None):
        self.label = int(label)
        super().__init__(message or f"class {label} has too few samples to populate every split")


class DegenerateEmbeddingError(ValueError):
    """The raw Fourier embedding of a sample is the zero vector and cannot be normalized."""


class ParseError(ValueError):
    """A data or model file could not be parsed.

    ``row`` is the 1-based line number in the file (header is line 1),
    ``column`` the offending column name, when known.
    """

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigError(ValueError):
    """A run configuration is missing keys or carries invalid values."""
