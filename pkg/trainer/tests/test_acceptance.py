"""End-to-end bar for the trainer, driven purely through the installed CLIs.

Three checks share two real pipeline-built scenes: a short training run
must reduce the loss, a long overfit run must score miou > 0.9 when the
predictions are graded by the dataset tool, and every emitted label image
must validate cleanly. The whole sequence has to fit a CPU time budget.
"""

import re
import time

import pytest

from conftest import run_cli

RUNTIME_BUDGET_S = 600.0
SMOKE_EPOCHS = 5
OVERFIT_EPOCHS = 200
OVERFIT_MIOU = 0.9


def _write_train_config(path, data_dir, epochs, batch_size):
    path.write_text(
        "[data]\n"
        f"dir = {data_dir}\n"
        "channels = 1\n"
        "merge = cls3\n"
        "\n"
        "[train]\n"
        f"epochs = {epochs}\n"
        "learning_rate = 0.003\n"
        f"batch_size = {batch_size}\n"
        "seed = 0\n"
    )
    return path


def _read_losses(out_dir):
    rows = (out_dir / "loss.csv").read_text().strip().splitlines()
    assert rows[0] == "epoch,loss"
    return [float(line.split(",")[1]) for line in rows[1:]]


@pytest.fixture(scope="module")
def clock():
    """Starts before any scene is built so the budget covers everything."""
    return time.perf_counter()


@pytest.fixture(scope="module")
def smoke_run(clock, scene20, tmp_path_factory):
    work = tmp_path_factory.mktemp("smoke")
    config = _write_train_config(
        work / "train.ini", scene20 / "out", SMOKE_EPOCHS, batch_size=4
    )
    out_dir = work / "run"
    code, stdout, stderr = run_cli(
        "ross-train", "--config", config, "--out", out_dir
    )
    assert code == 0, stderr
    return out_dir, stdout


@pytest.fixture(scope="module")
def overfit_run(clock, scene5, tmp_path_factory):
    work = tmp_path_factory.mktemp("overfit")
    config = _write_train_config(
        work / "train.ini", scene5 / "out", OVERFIT_EPOCHS, batch_size=5
    )
    run_dir = work / "run"
    code, _, stderr = run_cli("ross-train", "--config", config, "--out", run_dir)
    assert code == 0, stderr
    pred_dir = work / "pred"
    code, _, stderr = run_cli(
        "ross-predict",
        "--checkpoint", run_dir / "checkpoint.pt",
        "--data", scene5 / "out",
        "--out", pred_dir,
    )
    assert code == 0, stderr
    return run_dir, pred_dir


def test_short_run_reduces_loss(smoke_run):
    out_dir, stdout = smoke_run
    losses = _read_losses(out_dir)
    assert len(losses) == SMOKE_EPOCHS
    assert losses[-1] < losses[0]
    assert f"epochs = {SMOKE_EPOCHS}" in stdout


def test_overfit_scores_high_miou(overfit_run, scene5):
    _, pred_dir = overfit_run
    code, stdout, stderr = run_cli(
        "ross", "eval",
        "--pred", pred_dir / "labels",
        "--gt", scene5 / "gt",
    )
    assert code == 0, stderr
    match = re.search(r"^miou = ([0-9.]+)$", stdout, re.MULTILINE)
    assert match, stdout
    assert float(match.group(1)) > OVERFIT_MIOU


def test_outputs_validate_as_label_images(overfit_run):
    _, pred_dir = overfit_run
    written = sorted((pred_dir / "labels").glob("frame_*_label.png"))
    assert len(written) == 5
    code, stdout, stderr = run_cli("ross", "convert", "--check", *written)
    assert code == 0, stderr
    lines = stdout.strip().splitlines()
    assert len(lines) == len(written)
    assert all(line.startswith("ok labels ") for line in lines)


def test_runtime_within_budget(clock, smoke_run, overfit_run):
    assert time.perf_counter() - clock < RUNTIME_BUDGET_S
