"""Exception types raised across the pipeline.

Every error carries its class name to the CLI diagnostic stream, so names
are kept short and specific.
"""


class PipelineError(Exception):
    """Base class for all errors raised by sectorlstm."""


class DataError(PipelineError, ValueError):
    pass


class MalformedHeader(DataError):
    pass


class EmptySeries(DataError):
    pass


class DuplicateDate(DataError):
    pass


class FeedUnavailable(PipelineError):
    pass


class SplitOutOfRange(DataError):
    pass


class DegenerateRange(DataError):
    pass


class InsufficientData(DataError):
    pass


class ShapeMismatch(PipelineError, ValueError):
    pass


class StaleCache(PipelineError, ValueError):
    pass


class EmptyDataset(DataError):
    pass


class ScalerMismatch(PipelineError, ValueError):
    pass


class GridTooLarge(PipelineError, ValueError):
    pass


class CheckpointError(PipelineError, ValueError):
    pass


class Misaligned(DataError):
    pass


class TooShort(DataError):
    pass


class SignalGap(DataError):
    pass


class NonPositiveMeanPrice(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptySector(DataError):
    pass


class DuplicateSector(DataError):
    pass


class IoFailure(PipelineError, OSError):
    pass


class ConfigInvalid(PipelineError, ValueError):
    pass


class MissingStockResult(PipelineError, LookupError):
    pass
