"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array or codebook shapes do not line up."""


class StateError(RuntimeError):
    """An operation was called before its prerequisite (e.g. backward without a cached forward)."""


class CheckpointError(ValueError):
    """Base class for unreadable checkpoint files."""


class CheckpointVersionError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class FormatError(ValueError):
    """A text artifact (codebook, CSV, config) could not be parsed."""


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch}: loss={loss!r}")
        self.epoch = epoch
        self.loss = loss


class ConfigError(ValueError):
    """Invalid training or evaluation configuration."""
