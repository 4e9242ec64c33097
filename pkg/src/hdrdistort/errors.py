"""Exception types raised across the package."""


class HDRDistortError(Exception):
    """Base class for all package errors."""


class NonFiniteInput(HDRDistortError, ValueError):
    pass


class OutOfRange(HDRDistortError, ValueError):
    pass


class SizeMismatch(HDRDistortError, ValueError):
    pass


class OddWidth(HDRDistortError, ValueError):
    pass


class LayoutMismatch(HDRDistortError, ValueError):
    pass


class AxisMismatch(HDRDistortError, ValueError):
    pass


class IndexOutOfBounds(HDRDistortError, IndexError):
    pass


class TooFewReadings(HDRDistortError, ValueError):
    pass


class EmptyModel(HDRDistortError, ValueError):
    """A (channel, exposure) slot has no observations."""

    def __init__(self, message, channel=None, exposure=None):
        super().__init__(message)
        self.channel = channel
        self.exposure = exposure


class InsufficientBins(HDRDistortError, ValueError):
    pass


class PatchTooLarge(HDRDistortError, ValueError):
    pass


# file formats


class FormatError(HDRDistortError, ValueError):
    pass


class MalformedHeader(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class UnsupportedMaxVal(FormatError):
    pass


# manifests


class ManifestError(HDRDistortError, ValueError):
    pass


class ParseError(ManifestError):
    def __init__(self, message, line=None, field=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.field = field


class MissingPath(ManifestError):
    pass


class DuplicateSplit(ManifestError):
    pass
