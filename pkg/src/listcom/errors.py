"""Exceptions shared across the package."""


class ParseError(ValueError):
    """An input file is syntactically malformed."""


class ValidationError(ValueError):
    """Well-formed input violates a semantic constraint or precondition."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
