"""Exception hierarchy shared by every stage of the pipeline."""


class FcmadError(Exception):
    """Base class for all toolkit errors.

    ``stage`` is filled in by :func:`fcmad.detector.detect` when an error
    escapes one of the pipeline stages.
    """

    kind = "error"
    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class InvalidSpecError(FcmadError, ValueError):
    kind = "invalid-spec"


class InvalidConfigError(FcmadError, ValueError):
    kind = "invalid-config"


class DimensionError(FcmadError, ValueError):
    kind = "dimension-mismatch"


class DegenerateWindowError(FcmadError, ValueError):
    """A window row has zero variance, so its autocorrelation is undefined."""

    kind = "degenerate-window"

    def __init__(self, message, variable=None, start_index=None):
        super().__init__(message)
        self.variable = variable
        self.start_index = start_index


class DegenerateClusterError(FcmadError, ArithmeticError):
    kind = "degenerate-cluster"


class UndefinedIndexError(FcmadError, ArithmeticError):
    kind = "undefined-index"


class ParseError(FcmadError, ValueError):
    kind = "parse-error"

    def __init__(self, message, row=None, column=None):
        if row is not None:
            where = f"row {row}" + (f", column {column}" if column is not None else "")
            message = f"{message} at {where}"
        super().__init__(message)
        self.row = row
        self.column = column
