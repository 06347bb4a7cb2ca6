"""Training configuration: an INI file, flags may override single values."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

MERGE_MODES = ("cls3", "cls2-1", "cls2-2")


@dataclass(frozen=True)
class TrainConfig:
    data_dir: Path
    channels: int
    merge: str
    epochs: int = 40
    learning_rate: float = 3e-3
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ConfigError(f"channels must be 1 or 3, got {self.channels}")
        if self.merge not in MERGE_MODES:
            raise ConfigError(f"unknown merge mode {self.merge!r}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")


def load_train_config(path, overrides: dict | None = None) -> TrainConfig:
    """Parse an INI config; relative data dir resolves against the file.

    overrides maps TrainConfig field names to already-typed values and wins
    over the file.
    """
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(str(path)):
        raise ConfigError(f"cannot read config {path}")
    base = path.resolve().parent

    def get(section, key, cast, default):
        if not parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"{path}: missing [{section}] {key}")
            return default
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for [{section}] {key}: {raw}") from exc

    values = {
        "data_dir": Path(get("data", "dir", str, None)),
        "channels": get("data", "channels", int, 1),
        "merge": get("data", "merge", str, "cls3"),
        "epochs": get("train", "epochs", int, 40),
        "learning_rate": get("train", "learning_rate", float, 3e-3),
        "batch_size": get("train", "batch_size", int, 4),
        "seed": get("train", "seed", int, 0),
    }
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    if not values["data_dir"].is_absolute():
        values["data_dir"] = base / values["data_dir"]
    return TrainConfig(**values)
