"""Shared fixtures: fabricated mini datasets plus real CLI-built scenes."""

import io
import subprocess

import numpy as np
import pytest
from PIL import Image

from ross_trainer.data import file_sha256

# dataset geometry kept small so the torch tests stay quick
SIZE = 24


def run_cli(*args, cwd=None):
    proc = subprocess.run(
        [str(a) for a in args], capture_output=True, text=True, cwd=cwd
    )
    return proc.returncode, proc.stdout, proc.stderr


def write_png16(arr, path):
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint16)).save(buf, format="PNG")
    path.write_bytes(buf.getvalue())


def write_png8(arr, path):
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8)).save(buf, format="PNG")
    path.write_bytes(buf.getvalue())


def make_dataset(root, frames=3, channels=1, merge="cls3", size=SIZE, seed=0):
    """Fabricate a manifest-consistent dataset directory from scratch."""
    rng = np.random.default_rng(seed)
    bev = root / "bev"
    labels = root / "labels"
    bev.mkdir(parents=True)
    labels.mkdir()
    sidecar = "meters_per_pixel = 0.5\ncenter_row = %d\ncenter_col = %d\n" % (
        size // 2,
        size // 2,
    )
    for k in range(frames):
        stem = f"frame_{k:06d}"
        gt = rng.integers(0, 4, (size, size)).astype(np.uint8)
        # make the task learnable: energy keyed to the class
        energy = gt.astype(np.uint16) * 12000 + rng.integers(0, 2000, (size, size))
        write_png16(energy, bev / f"{stem}.png")
        (bev / f"{stem}.txt").write_text(sidecar)
        for h in range(1, channels):
            write_png16(np.roll(energy, h, axis=1), bev / f"{stem}_t{h}.png")
            (bev / f"{stem}_t{h}.txt").write_text(sidecar)
        write_png8(gt, labels / f"{stem}_label.png")
        (labels / f"{stem}_label.txt").write_text(sidecar)
    rel_paths = sorted(
        str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()
    )
    lines = [
        f"# channels = {channels}",
        f"# merge = {merge}",
        f"# frames = {frames}",
    ]
    lines += [f"{file_sha256(root / rel)}  {rel}" for rel in rel_paths]
    (root / "manifest.txt").write_text("\n".join(lines) + "\n")
    return root


@pytest.fixture
def mini_dataset(tmp_path):
    return make_dataset(tmp_path / "data")


SCENE_INI = """\
[scene]
seed = 12345
extent = 60.0
ground_base = 0.3125
ground_slope = 0.015625 0.0
void_fraction = 0.05

[lidar]
range = 18.0
height = 1.2
extra_returns = 2

[scan]
count = {count}
start = 0.0 0.0
step = 1.0 0.0
t0 = 0.0
dt = 0.5

[radar]
n_azimuth = 180
n_range_bins = 60
range_resolution = 0.5
azimuth_0 = 0.0

[sensors]
extrinsic = 0.5 0.0 0.4

[bev]
meters_per_pixel = 0.5
size = 96 96

[fusion]
voxel_size = 0.25
z_band = -1.0 3.0

[intensity]
ground = 16000.0 2500.0
bushes = 18000.0 2500.0
obstacles = 20000.0 5800.0
background = 3000.0 1200.0

[bushes]
b00 = 6.0 4.0 3.5 1.5
b01 = 12.0 -5.0 3.0 2.0
b02 = 16.0 6.0 4.0 1.5

[boxes]
b00 = 9.0 -2.0 7.0 8.0 2.0
b01 = 16.0 5.0 9.0 6.0 2.0
"""


def build_scene(root, count):
    """Generate a scene and run the batch pipeline over it via the CLI."""
    spec = root / "scene_spec.ini"
    spec.write_text(SCENE_INI.format(count=count))
    code, out, err = run_cli("ross", "synth", "--spec", spec, "--out", root / "scene")
    assert code == 0, err
    code, out, err = run_cli(
        "ross", "pipeline", "--config", root / "scene" / "run.ini", "--jobs", "4"
    )
    assert code == 0, err
    return root / "scene"


@pytest.fixture(scope="session")
def scene20(tmp_path_factory):
    return build_scene(tmp_path_factory.mktemp("scene20"), 20)


@pytest.fixture(scope="session")
def scene5(tmp_path_factory):
    return build_scene(tmp_path_factory.mktemp("scene5"), 5)
