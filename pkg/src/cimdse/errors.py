"""Exception types shared across the package."""


class CimdseError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(CimdseError):
    """A design-point field is outside its candidate set."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class CalibrationError(CimdseError):
    """Calibration document is malformed or violates a coefficient invariant."""


class ParseError(CimdseError):
    """A structured-text input could not be parsed.

    Carries file/line context so the CLI can emit precise diagnostics.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class TraceCapError(CimdseError):
    """Trace event cap exceeded; carries the partial trace collected so far."""

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class EmptySpaceError(CimdseError):
    """A restricted design space or filter matched no points."""
