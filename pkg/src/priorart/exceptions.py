"""Exception hierarchy shared across the package.

Validation problems (bad files, bad parameters, domain violations) subclass
``ValidationError`` and map to CLI exit code 2; numeric failures map to 3.
"""


class PriorArtError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PriorArtError, ValueError):
    """Malformed input data, file, or schema."""


class ParameterError(ValidationError):
    """A parameter is outside its documented range."""


class DomainError(ValidationError):
    """A vector violates the domain a measure requires (sign, dim, norm)."""


class NumericError(PriorArtError, ArithmeticError):
    """A computation produced a non-finite value."""


class StageError(PriorArtError, RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
