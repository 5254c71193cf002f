"""Exception types shared across the package."""


class EngagekitError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidSignalError(EngagekitError, ValueError):
    """A telemetry value is non-finite, negative, or otherwise out of its range."""


class OrderingError(EngagekitError, ValueError):
    """Timestamps went backwards (or repeated) where monotonic time is required."""


class TraceFormatError(EngagekitError, ValueError):
    """A trace file could not be parsed or failed field validation.

    ``line_number`` is 1-based and refers to the offending line when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TraceVersionError(TraceFormatError):
    """The trace header declares a schema version this reader does not support."""


class ConfigError(EngagekitError, ValueError):
    """A configuration value (or scenario parameter) violates an invariant."""


class ProviderError(EngagekitError, RuntimeError):
    """The content provider returned a malformed or unusable response."""
