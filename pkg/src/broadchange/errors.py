"""Exception types raised by the change-detection pipeline."""


class ChangeDetectionError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(ChangeDetectionError):
    """An image file could not be read or decoded."""


class DimensionMismatch(ChangeDetectionError):
    """Two rasters or matrices have incompatible shapes."""


class InsufficientClassSamples(ChangeDetectionError):
    """A class has too few samples for the requested operation."""


class TargetExceedsAvailable(ChangeDetectionError):
    """Under-sampling target is larger than the class being shrunk."""


class EmptyClass(ChangeDetectionError):
    """A resampling operation was asked to act on a class with no samples."""


class SingletonClass(ChangeDetectionError):
    """SMOTE cannot interpolate from a single sample."""


class InsufficientMajority(ChangeDetectionError):
    """Not enough majority samples to reach the requested imbalance ratio."""


class SingularSystem(ChangeDetectionError):
    """Normal equations are singular and no ridge term was supplied."""


class NonFiniteInput(ChangeDetectionError):
    """A matrix argument contains NaN or infinity."""


class LengthMismatch(ChangeDetectionError):
    """Two label vectors have different lengths."""


class FormatError(ChangeDetectionError):
    """A model file is truncated, malformed, or missing required fields."""


class VersionMismatch(ChangeDetectionError):
    """A model file declares an unsupported format version."""


class GeometryError(ChangeDetectionError):
    """Synthetic-scene geometry does not fit inside the image."""
