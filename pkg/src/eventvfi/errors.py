"""Exception hierarchy.

The CLI maps these onto exit codes, so every failure raised by the library
falls into exactly one of three buckets: configuration, I/O, or validation.
"""


class EventVFIError(Exception):
    """Base class for all library errors."""


class ConfigError(EventVFIError, ValueError):
    """Invalid parameter value or configuration key."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain of a function (e.g. sigma <= 0)."""


class InvalidRangeError(ConfigError):
    """Empty or reversed time window."""


class ValidationError(EventVFIError, ValueError):
    """Data violates a structural invariant (bounds, ordering, polarity)."""


class ShapeError(ValidationError):
    """Array shapes or resolutions do not agree."""


class InstanceError(ValidationError):
    """Not enough frames to form an interpolation instance."""


class IOFormatError(EventVFIError, OSError):
    """Base class for on-disk format problems."""


class ParseError(IOFormatError):
    """Malformed line in a text file."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class FormatError(IOFormatError):
    """Bad magic number or unsupported version in a binary file."""


class CorruptionError(IOFormatError):
    """Binary payload shorter than its header declares."""

    def __init__(self, message, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        super().__init__(message)


class ManifestError(IOFormatError):
    """Frame directory and its timestamps sidecar disagree."""
