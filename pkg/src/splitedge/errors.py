"""Exception types. Every error carries a stable ``code`` string."""


class SplitEdgeError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", code: str | None = None):
        if code is not None:
            self.code = code
        super().__init__(message or self.code)


class RangeError(SplitEdgeError, ValueError):
    """A value is outside its allowed range. ``field`` names the offender."""

    code = "RANGE_ERROR"

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(message or f"{field} out of range")


class FitError(SplitEdgeError, ValueError):
    """Raised by polynomial fitting; ``curve`` is set when fitting a named curve."""

    def __init__(self, code: str, message: str = "", curve: str | None = None):
        self.curve = curve
        prefix = f"{curve}: " if curve else ""
        super().__init__(prefix + (message or code), code=code)


class UnknownCurveError(SplitEdgeError, KeyError):
    code = "UNKNOWN_CURVE"


class ModelError(SplitEdgeError, ValueError):
    """Numeric model precondition failure (ZERO_RATE, DIV_BY_ZERO, ...)."""


class DimensionMismatch(SplitEdgeError, ValueError):
    code = "DIMENSION_MISMATCH"


class MalformedPayload(SplitEdgeError, ValueError):
    code = "MALFORMED_PAYLOAD"


class TransportError(SplitEdgeError):
    code = "TRANSPORT_DOWN"


class BackpressureError(TransportError):
    code = "BACKPRESSURE"


class ConfigError(SplitEdgeError, ValueError):
    code = "CONFIG_ERROR"


class ProfileError(SplitEdgeError, ValueError):
    code = "PROFILE_ERROR"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
