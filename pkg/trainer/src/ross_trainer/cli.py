"""Entry points: ross-train fits a model, ross-predict writes label images.

Exit codes match the dataset tool: 0 ok, 2 usage, 3 malformed file,
4 dataset or numeric problem.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import load_train_config
from .errors import CheckpointError, ConfigError, DatasetError, FormatError, ShapeError
from .predict import predict as run_predict
from .training import train as run_train


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (FormatError, CheckpointError)):
        return 3
    if isinstance(exc, (DatasetError, ShapeError)):
        return 4
    if isinstance(exc, ConfigError):
        return 2
    return 4


@click.command(name="ross-train")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None,
              help="override the config's dataset directory")
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
def train_main(config_path, out_dir, data_dir, epochs, learning_rate, batch_size, seed):
    """Train on a pipeline-emitted dataset; write checkpoint.pt and loss.csv."""
    try:
        overrides = {
            "epochs": epochs,
            "learning_rate": learning_rate,
            "batch_size": batch_size,
            "seed": seed,
        }
        if data_dir is not None:
            overrides["data_dir"] = Path(data_dir).resolve()
        cfg = load_train_config(config_path, overrides)
        result = run_train(cfg, out_dir)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_code(exc))
    click.echo(f"epochs = {len(result['losses'])}")
    click.echo(f"final_loss = {result['losses'][-1]:.6f}")
    click.echo(f"checkpoint = {result['checkpoint']}")


@click.command(name="ross-predict")
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def predict_main(checkpoint, data_dir, out_dir):
    """Write one label image per BEV frame in the dataset."""
    try:
        written = run_predict(checkpoint, data_dir, out_dir)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(_exit_code(exc))
    click.echo(f"frames = {len(written)}")
    click.echo(f"labels = {written[0].parent if written else out_dir}")
