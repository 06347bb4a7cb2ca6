"""Error taxonomy, one class per failure family."""


class TrainerError(Exception):
    """Base for everything this package raises on purpose."""


class ConfigError(TrainerError):
    """Bad or missing configuration value."""


class FormatError(TrainerError):
    """Malformed file on disk."""


class DatasetError(TrainerError):
    """Dataset does not match the config or fails manifest verification."""


class ShapeError(TrainerError):
    """Arrays whose geometry does not line up."""


class CheckpointError(TrainerError):
    """Unusable checkpoint file."""
