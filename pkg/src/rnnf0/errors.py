"""Exception types raised across the toolkit."""


class PitchToolkitError(Exception):
    """Base class for all errors raised by :mod:`rnnf0`."""


class EmptyInputError(PitchToolkitError, ValueError):
    pass


class DomainError(PitchToolkitError, ValueError):
    pass


class DegenerateInputError(PitchToolkitError, ValueError):
    pass


class DimensionError(PitchToolkitError, ValueError):
    pass


class ConfigError(PitchToolkitError, ValueError):
    pass


class AlignmentError(PitchToolkitError, ValueError):
    pass


class IngestError(PitchToolkitError, ValueError):
    """Audio, ground-truth or manifest file could not be read."""


class CheckpointError(PitchToolkitError, ValueError):
    """Checkpoint file is corrupt, truncated or has the wrong version."""


class TrainingDivergedError(PitchToolkitError, RuntimeError):
    """Loss became NaN or infinite during training."""
