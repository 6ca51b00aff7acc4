"""Exception hierarchy shared across the package."""


class PumpscanError(Exception):
    """Base class for all package errors."""


class MalformedRecord(PumpscanError):
    """A raw record (CSV row, API row) could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OhlcViolation(PumpscanError):
    """Candle prices break the low <= open/close <= high ordering."""


class NegativeVolume(PumpscanError):
    """Candle volume is negative."""


class EmptySeries(PumpscanError):
    """An operation that needs candles received none."""


class EmptyFile(PumpscanError):
    """A required input file has no data rows."""


class EmptyDataset(PumpscanError):
    """A sweep was asked to run over zero symbols."""


class NoCompleteDays(PumpscanError):
    """EWMA over daily totals requires at least one complete day."""


class MissingContext(PumpscanError):
    """An eligibility rule has no baseline to compare against."""


class InvalidSpec(PumpscanError):
    """A synthetic scenario spec is internally inconsistent."""


class NetworkError(PumpscanError):
    """Transport-level failure talking to the exchange API."""


class ApiError(PumpscanError):
    """Non-2xx response from the exchange API."""

    def __init__(self, status, payload=None):
        self.status = status
        self.payload = payload
        super().__init__(f"HTTP {status}: {payload!r}")


class DecodeError(PumpscanError):
    """Response body was not the expected JSON shape."""


class RateLimitExhausted(PumpscanError):
    """Retries were spent without a successful response."""


class PartialData(PumpscanError):
    """The server returned less than the requested span."""


class IoError(PumpscanError):
    """Filesystem-level failure while storing or loading series."""
