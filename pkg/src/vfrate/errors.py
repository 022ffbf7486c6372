"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class VfrError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class DataFormatError(VfrError, ValueError):
    exit_code = 3


class SizeMismatchError(DataFormatError):
    """File size is not a whole number of frames."""


class DimensionMismatchError(DataFormatError):
    """Frames, maps or vectors do not share the expected shape."""


class ModelParseError(DataFormatError):
    """A model file could not be decoded."""


class ModelVersionError(VfrError):
    exit_code = 4


class EmptySetError(VfrError, ValueError):
    """An operation received an empty sample set."""


class SingleClassError(VfrError, ValueError):
    """Training data contains fewer than two classes."""


class MissingScoreError(DataFormatError):
    """A subjective score table lacks a required observer/condition entry."""


class UndersizedSampleError(VfrError, ValueError):
    """A statistical test received too few observations."""
