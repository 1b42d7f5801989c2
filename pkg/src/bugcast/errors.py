"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class BugcastError(Exception):
    exit_code = 1


class ValidationError(BugcastError, ValueError):
    exit_code = 3


class InsufficientDataError(ValidationError):
    pass


class AlignmentError(ValidationError):
    pass


class InvalidRangeError(ValidationError):
    pass


class UnknownWeekError(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class TransformDomainError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class RankDeficiencyError(ValidationError):
    pass


class DegenerateRegressionError(ValidationError):
    pass


class DivergenceError(BugcastError):
    pass


class DataIOError(BugcastError, OSError):
    exit_code = 2


class SchemaError(ValidationError):
    """Malformed CSV content. Carries the 1-based row number when known."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class FetchError(DataIOError):
    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts
        self.retryable = True


class ResponseParseError(DataIOError):
    def __init__(self, message, excerpt=""):
        super().__init__(f"{message}: {excerpt!r}" if excerpt else message)
        self.excerpt = excerpt
