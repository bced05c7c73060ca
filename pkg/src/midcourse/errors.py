"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ``ConfigError`` -> 1, ``DataError`` -> 2,
``NumericError`` -> 3.
"""


class MidcourseError(Exception):
    pass


class ConfigError(MidcourseError):
    pass


class DataError(MidcourseError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DataError):
    pass


class ShapeError(MidcourseError, ValueError):
    pass


class DomainError(MidcourseError, ValueError):
    pass


class NumericError(MidcourseError, ArithmeticError):
    pass


class TrainingError(NumericError):
    pass
