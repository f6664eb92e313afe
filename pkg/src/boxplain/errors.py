"""Exception hierarchy shared by every module; exit codes match the CLI contract."""


class BoxplainError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(BoxplainError):
    """Caller misuse: bad arguments, schema mismatches, mixed result kinds."""

    exit_code = 1


class DataError(BoxplainError):
    """Problems with the data itself: malformed CSV, missing values, bad target."""

    exit_code = 2


class FitError(DataError):
    """A built-in model cannot be fitted on the given data (e.g. rank deficiency)."""


class ModelAdapterError(BoxplainError):
    """The wrapped model violated the predict contract or an external call failed."""

    exit_code = 3

    def __init__(self, message, stderr_text=""):
        super().__init__(message)
        self.stderr_text = stderr_text


class OutputError(BoxplainError):
    """I/O failure while reading inputs or writing outputs."""

    exit_code = 4
