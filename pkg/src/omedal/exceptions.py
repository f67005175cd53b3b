"""Exception types raised across the package."""


class OMedALError(Exception):
    """Base class for all package errors."""


class ConfigError(OMedALError, ValueError):
    """Invalid configuration value. ``key`` names the offending field when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ShapeError(OMedALError, ValueError):
    pass


class DataError(OMedALError, ValueError):
    pass


class ParseError(DataError):
    """Malformed input file. ``offset`` is a line number (text) or byte offset (binary)."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class PreconditionError(OMedALError, RuntimeError):
    pass


class UndefinedMetricError(OMedALError, ValueError):
    pass


class UnsupportedPredictionError(OMedALError, ValueError):
    pass
