"""Exception hierarchy shared across the package."""


class SENError(Exception):
    """Base class for every error raised by senhar."""


class DimensionError(SENError, ValueError):
    """Operand shapes disagree."""


class ContractError(SENError, ValueError):
    """A caller violated an operation's precondition."""


class ConfigurationError(SENError, ValueError):
    pass


class NumericError(SENError, ArithmeticError):
    """Non-finite values appeared during training or optimization."""


class SegmentationError(SENError, ValueError):
    pass


class SamplingError(SENError, ValueError):
    pass


class DegenerateEmbeddingError(SENError, ValueError):
    """An embedding or class center has zero norm."""


class CoverageError(SENError, ValueError):
    """A class required by the operation has no samples."""


class StatisticsError(SENError, ValueError):
    pass


class DataError(SENError, IOError):
    """Input data is missing, unreadable or malformed."""


class CheckpointError(SENError, IOError):
    pass
