"""Exception hierarchy shared across the package."""


class UavadError(Exception):
    """Base class for all errors raised by this package."""


# --- log model ---

class UnknownGroup(UavadError):
    pass


class UnknownField(UavadError):
    pass


class EmptySeries(UavadError):
    pass


class GridBeforeData(UavadError):
    pass


# --- parsing ---

class ParseError(UavadError):
    """Raised in strict mode; carries the 1-based offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.reason = message


class MalformedFmt(ParseError):
    pass


class UnknownMessage(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


class MalformedRecord(ParseError):
    pass


class NonMonotonicTime(ParseError):
    pass


class BadJson(UavadError):
    pass


class UnknownAnomalyType(UavadError):
    pass


class InvertedSpan(UavadError):
    pass


# --- features / datasets ---

class MissingChannel(UavadError):
    pass


class EmptyInput(UavadError):
    pass


class ShapeMismatch(UavadError):
    pass


class TooShort(UavadError):
    pass


class EmptyDataset(UavadError):
    pass


class LengthMismatch(UavadError):
    pass


class TooFewPoints(UavadError):
    pass


# --- neural ---

class NonFiniteLoss(UavadError):
    """Training or scoring produced a non-finite loss (divergence)."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class VersionMismatch(UavadError):
    pass


# --- detection ---

class ThresholdUnset(UavadError):
    pass


class OneClassOnly(UavadError):
    pass


# --- synthesis ---

class BadInterval(UavadError):
    pass
