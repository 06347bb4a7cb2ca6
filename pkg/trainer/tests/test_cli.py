"""Console behavior of ross-train and ross-predict: codes, lines, files."""

import pytest

from conftest import make_dataset, run_cli


def _write_config(path, data_dir, channels=1, merge="cls3"):
    path.write_text(
        f"[data]\ndir = {data_dir}\nchannels = {channels}\nmerge = {merge}\n"
    )
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """One short real training run shared by the happy-path tests."""
    work = tmp_path_factory.mktemp("cli")
    data = make_dataset(work / "data")
    config = _write_config(work / "train.ini", data)
    out_dir = work / "run"
    code, stdout, stderr = run_cli(
        "ross-train",
        "--config", config,
        "--out", out_dir,
        "--epochs", 1,
        "--batch-size", 2,
    )
    return data, out_dir, code, stdout, stderr


class TestTrainCli:
    def test_reports_run(self, trained):
        _, out_dir, code, stdout, stderr = trained
        assert code == 0, stderr
        assert "epochs = 1" in stdout
        assert "final_loss = " in stdout
        assert f"checkpoint = {out_dir / 'checkpoint.pt'}" in stdout
        assert (out_dir / "loss.csv").exists()

    def test_missing_flags_are_usage_errors(self):
        code, _, stderr = run_cli("ross-train")
        assert code == 2
        assert "--config" in stderr

    def test_invalid_config_value(self, tmp_path):
        config = _write_config(tmp_path / "t.ini", tmp_path, channels=7)
        code, _, stderr = run_cli(
            "ross-train", "--config", config, "--out", tmp_path / "run"
        )
        assert code == 2
        assert "channels" in stderr

    def test_unreadable_dataset(self, tmp_path):
        config = _write_config(tmp_path / "t.ini", tmp_path / "nowhere")
        code, _, stderr = run_cli(
            "ross-train", "--config", config, "--out", tmp_path / "run"
        )
        assert code == 4
        assert stderr.startswith("error:")

    def test_data_override_beats_config(self, tmp_path, trained):
        data, _, _, _, _ = trained
        config = _write_config(tmp_path / "t.ini", tmp_path / "nowhere")
        code, _, stderr = run_cli(
            "ross-train",
            "--config", config,
            "--out", tmp_path / "run",
            "--data", data,
            "--epochs", 1,
            "--batch-size", 2,
        )
        assert code == 0, stderr


class TestPredictCli:
    def test_writes_labels(self, trained, tmp_path):
        data, out_dir, code, _, stderr = trained
        assert code == 0, stderr
        pred = tmp_path / "pred"
        code, stdout, stderr = run_cli(
            "ross-predict",
            "--checkpoint", out_dir / "checkpoint.pt",
            "--data", data,
            "--out", pred,
        )
        assert code == 0, stderr
        assert "frames = 3" in stdout
        assert f"labels = {pred / 'labels'}" in stdout
        assert len(list((pred / "labels").glob("*_label.png"))) == 3

    def test_missing_checkpoint(self, trained, tmp_path):
        data, _, _, _, _ = trained
        code, _, stderr = run_cli(
            "ross-predict",
            "--checkpoint", tmp_path / "none.pt",
            "--data", data,
            "--out", tmp_path / "pred",
        )
        assert code == 3
        assert stderr.startswith("error:")
