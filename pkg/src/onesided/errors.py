"""Exception hierarchy shared by all onesided modules."""


class OneSidedError(Exception):
    """Base class for every error raised by this package."""


class FormatError(OneSidedError, ValueError):
    """A data file has the wrong layout (ragged rows, missing columns)."""


class ParseError(OneSidedError, ValueError):
    """A field could not be converted to the expected type."""


class LabelError(OneSidedError, ValueError):
    """An unknown class label or provenance token."""


class ShapeError(OneSidedError, ValueError):
    """Channel counts or vector lengths disagree."""


class InvariantError(OneSidedError, ValueError):
    """A domain invariant would be violated."""


class SplitError(OneSidedError, ValueError):
    """A dataset cannot be partitioned as requested."""


class DistanceError(OneSidedError, ValueError):
    """A distance is undefined for the given vectors."""


class TrainingError(OneSidedError, ValueError):
    """A model cannot be fitted on the given data."""


class PersistenceError(OneSidedError):
    """A model file cannot be written or read back."""
