"""Exception types shared across the pipeline.

The CLI maps ``DataError`` subclasses to exit code 2 and ``NumericError`` to 3.
"""


class NilmError(Exception):
    """Base class for all package errors."""


class DataError(NilmError):
    """Input data cannot be processed."""


class NumericError(NilmError):
    """A NaN or Inf appeared in a forward or backward pass."""


# signal-core
class TooShort(DataError):
    pass


class NoFundamental(DataError):
    pass


class BadLength(DataError):
    pass


class ZeroSpectrum(DataError):
    pass


# synth
class LengthMismatch(DataError):
    pass


# nn / recognizer
class ShapeMismatch(NilmError, ValueError):
    pass


class OddSpatialDim(ShapeMismatch):
    pass


class BadLabel(DataError, ValueError):
    pass


class BadImageShape(DataError, ValueError):
    pass


class EmptyDataset(DataError):
    pass


class CheckpointError(DataError):
    pass


# harness
class ManifestInvalid(DataError):
    pass


class AllRecordsSkipped(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class LabelOutOfRange(DataError, ValueError):
    pass


class IoError(DataError):
    pass
