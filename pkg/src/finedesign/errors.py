"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToolkitError, ValueError):
    """A manifest, config, or dataset violates its contract."""


class ManifestParseError(ValidationError):
    """A manifest file is not well-formed JSONL."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NumericalError(ToolkitError, ArithmeticError):
    """A numerical routine received or produced non-finite values."""


class TrainingDivergedError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        super().__init__(message or f"non-finite training loss at epoch {epoch}")
        self.epoch = epoch
