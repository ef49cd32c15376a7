"""Exception types shared across the toolkit."""


class SdMapKitError(Exception):
    """Base class for all toolkit errors."""


class InvalidCoordinate(SdMapKitError):
    pass


class EmptyInput(SdMapKitError):
    pass


class MalformedXml(SdMapKitError):
    """Raised for XML that does not parse; message carries line/column."""


class InvalidDensity(SdMapKitError):
    pass


class DimensionMismatch(SdMapKitError):
    pass


class NonSquareAdjacency(DimensionMismatch):
    pass


class LengthMismatch(SdMapKitError):
    pass


class EmptySet(SdMapKitError):
    pass


class OutOfRange(SdMapKitError):
    pass


class TooManyChannels(SdMapKitError):
    pass


class SchemaError(SdMapKitError):
    """Raised when a serialized artifact violates its documented format."""
