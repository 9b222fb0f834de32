"""Exception hierarchy.

Every error raised on bad input data derives from :class:`DataError` so the
CLI can map it to exit code 2 in one place.
"""


class StoresightError(Exception):
    """Base class for all package errors."""


class DataError(StoresightError):
    """Invalid input data. ``line_no`` is 1-based when the error is positioned."""

    def __init__(self, message, line_no=None, text=None):
        self.line_no = line_no
        self.text = text
        if line_no is not None:
            message = f"line {line_no}: {message}"
            if text is not None:
                message = f"{message}: {text!r}"
        super().__init__(message)


class UsageError(StoresightError):
    """Bad command-line usage or configuration."""


# io_formats
class MalformedLine(DataError):
    pass


class NonPositiveBox(DataError):
    pass


class ScoreOutOfRange(DataError):
    pass


class NonPositiveId(DataError):
    pass


class UnsortedInput(DataError):
    pass


class BadDate(DataError):
    pass


class DuplicateKey(DataError):
    pass


# kalman
class NonPositiveSize(DataError):
    pass


class SingularInnovation(DataError):
    pass


class SingularTransform(DataError):
    pass


# assignment / tracker
class NonFiniteCost(DataError):
    pass


class InvalidThresholds(DataError):
    pass


class NonMonotonicFrame(DataError):
    pass


# analytics
class UnsortedRecords(DataError):
    pass


class EmptyHeatMap(DataError):
    pass


# metrics
class NoGroundTruth(DataError):
    pass


class EmptyGroundTruth(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ZeroActualInMAPE(DataError):
    pass


class ConstantActualInR2(DataError):
    pass


class ZeroBaseline(DataError):
    pass


# forecasting
class SingularSystem(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class InsufficientHistory(DataError):
    pass
