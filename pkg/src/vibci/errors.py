"""Exception hierarchy shared by every stage of the toolkit."""


class VibciError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VibciError, ValueError):
    """Invalid input, configuration or file content."""


class ParseError(ValidationError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DesignError(ValidationError):
    """Filter design failed (bad edges or a numerically unstable result)."""


class LengthError(ValidationError):
    """Signal too short for the requested operation."""


class RangeError(ValidationError, IndexError):
    """A requested sample window falls outside the trial or recording."""


class StageError(VibciError):
    """Runtime failure inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
