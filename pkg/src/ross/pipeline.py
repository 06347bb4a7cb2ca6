"""End-to-end batch runner: scans + trajectory + radar in, labeled BEV out.

Everything is staged under <output>/incomplete/ and moved into place only
when the whole run succeeds, so a crashed run never leaves partial files
at final paths. Given the same inputs the outputs are byte-identical, with
any number of worker threads.
"""

from __future__ import annotations

import configparser
import os
import shutil
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats, fusion, metrics, projection
from .errors import ConfigError, DataError, FormatError, InsufficientHistoryError
from .geometry import interpolate_pose
from .taxonomy import load_class_table

__all__ = ["PipelineConfig", "load_pipeline_config", "run_pipeline", "staged_output"]


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved batch-run settings; paths are absolute."""

    scans_dir: Path
    trajectory_path: Path
    calibration_path: Path
    radar_dir: Path
    output_dir: Path
    eval_gt_dir: Path | None
    class_table_path: Path | None
    voxel_size: float
    origin: tuple[float, float, float]
    min_points: int
    z_band: tuple[float, float]
    meters_per_pixel: float
    bev_size: tuple[int, int]
    channels: int
    merge: str


def load_pipeline_config(path) -> PipelineConfig:
    """Parse an INI run config; relative paths resolve against the file."""
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(str(path)):
        raise ConfigError(f"cannot read config {path}")
    base = path.resolve().parent

    def _path(key, required=True):
        if not parser.has_option("paths", key):
            if required:
                raise ConfigError(f"{path}: missing [paths] {key}")
            return None
        p = Path(parser.get("paths", key))
        return p if p.is_absolute() else base / p

    def _get(section, key, cast, default):
        if not parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"{path}: missing [{section}] {key}")
            return default
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for [{section}] {key}: {raw}") from exc

    def _pair(raw):
        parts = raw.split()
        if len(parts) != 2:
            raise ValueError(raw)
        return (float(parts[0]), float(parts[1]))

    def _triple(raw):
        parts = raw.split()
        if len(parts) != 3:
            raise ValueError(raw)
        return tuple(float(v) for v in parts)

    def _size(raw):
        parts = raw.split()
        if len(parts) != 2:
            raise ValueError(raw)
        return (int(parts[0]), int(parts[1]))

    channels = _get("input", "channels", int, 1)
    if channels not in (1, 3):
        raise ConfigError(f"{path}: [input] channels must be 1 or 3, got {channels}")
    merge = _get("eval", "merge", str, "cls3")
    if merge not in metrics.MERGE_MODES:
        raise ConfigError(f"{path}: unknown merge mode {merge!r}")
    cfg = PipelineConfig(
        scans_dir=_path("scans"),
        trajectory_path=_path("trajectory"),
        calibration_path=_path("calibration"),
        radar_dir=_path("radar"),
        output_dir=_path("output"),
        eval_gt_dir=_path("eval_gt", required=False),
        class_table_path=_path("class_table", required=False),
        voxel_size=_get("fusion", "voxel_size", float, 0.25),
        origin=_get("fusion", "origin", _triple, (0.0, 0.0, 0.0)),
        min_points=_get("fusion", "min_points", int, 0),
        z_band=_get("fusion", "z_band", _pair, (-1.0, 3.0)),
        meters_per_pixel=_get("bev", "meters_per_pixel", float, 0.5),
        bev_size=_get("bev", "size", _size, (512, 512)),
        channels=channels,
        merge=merge,
    )
    if cfg.voxel_size <= 0:
        raise ConfigError(f"{path}: voxel_size must be positive")
    if cfg.meters_per_pixel <= 0:
        raise ConfigError(f"{path}: meters_per_pixel must be positive")
    if cfg.z_band[0] >= cfg.z_band[1]:
        raise ConfigError(f"{path}: z_band must satisfy min < max")
    return cfg


@contextmanager
def staged_output(final_dir):
    """Yield a staging dir; on success its children replace final entries."""
    final_dir = Path(final_dir)
    final_dir.mkdir(parents=True, exist_ok=True)
    stage = final_dir / "incomplete"
    if stage.exists():
        shutil.rmtree(stage)
    stage.mkdir()
    try:
        yield stage
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    for child in sorted(stage.iterdir()):
        dest = final_dir / child.name
        if dest.is_dir():
            shutil.rmtree(dest)
        elif dest.exists():
            dest.unlink()
        os.replace(child, dest)
    stage.rmdir()


def _sorted_files(directory: Path, suffix: str):
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix == suffix)


def format_report(report, nonvoid_fraction=None) -> str:
    """Render a metric report as a small stable text block."""
    lines = [f"# pixels = {report.evaluated_pixels}"]
    if nonvoid_fraction is not None:
        lines.append(f"# nonvoid_fraction = {nonvoid_fraction:.6f}")
    for name, iou, acc in zip(
        report.class_names, report.per_class_iou, report.per_class_accuracy
    ):
        lines.append(f"{name}: iou = {iou:.6f}, acc = {acc:.6f}")
    lines.append(f"miou = {report.miou:.6f}")
    lines.append(f"macc = {report.macc:.6f}")
    return "\n".join(lines) + "\n"


def run_pipeline(config: PipelineConfig, jobs: int = 1) -> dict:
    """Fuse scans, render one BEV + label image per radar frame, evaluate.

    Returns a summary dict with the emitted frame indices, the output dir,
    and the metric report when ground truth was configured.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    table = load_class_table(config.class_table_path)
    scan_paths = _sorted_files(config.scans_dir, ".bin")
    if not scan_paths:
        raise DataError(f"no scans in {config.scans_dir}")
    scans = [formats.read_cloud(p) for p in scan_paths]
    traj = formats.read_trajectory(config.trajectory_path)
    extrinsic, _ = formats.read_calibration(config.calibration_path)
    radar_paths = _sorted_files(config.radar_dir, ".png")
    frames = [formats.read_radar_frame(p) for p in radar_paths]
    if len(frames) < config.channels:
        raise InsufficientHistoryError(
            f"{len(frames)} radar frames cannot fill {config.channels} channels"
        )

    cloud = fusion.accumulate(scans, traj)
    vox_map = fusion.build_voxel_map(
        cloud,
        class_table=table,
        voxel_size=config.voxel_size,
        origin=config.origin,
        min_points=config.min_points,
    )

    first = config.channels - 1
    emitted = list(range(first, len(frames)))

    def _one_frame(k: int, out_root: Path):
        window = frames[k - config.channels + 1 : k + 1]
        stacked = projection.stack_frames(
            window,
            traj,
            n=config.channels,
            mpp=config.meters_per_pixel,
            size=config.bev_size,
            extrinsic=extrinsic,
        )
        formats.write_bev(stacked.channels[0], out_root / "bev" / f"frame_{k:06d}.png")
        for ch in range(1, config.channels):
            formats.write_bev(
                stacked.channels[ch], out_root / "bev" / f"frame_{k:06d}_t{ch}.png"
            )
        pose = interpolate_pose(traj, frames[k].timestamp)
        label = projection.render_label_image(
            vox_map,
            pose,
            lidar_to_radar=extrinsic,
            mpp=config.meters_per_pixel,
            size=config.bev_size,
            z_band=config.z_band,
        )
        formats.write_label_image(label, out_root / "labels" / f"frame_{k:06d}_label.png")
        return label

    with staged_output(config.output_dir) as stage:
        (stage / "bev").mkdir()
        (stage / "labels").mkdir()
        formats.write_voxel_map(vox_map, stage / "voxel_map.bin")
        if jobs == 1:
            labels = [_one_frame(k, stage) for k in emitted]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                labels = list(pool.map(lambda k: _one_frame(k, stage), emitted))

        report = None
        nonvoid = None
        if config.eval_gt_dir is not None:
            total = 0
            void = 0
            matrices = []
            for k, pred in zip(emitted, labels):
                gt_path = Path(config.eval_gt_dir) / f"frame_{k:06d}_label.png"
                gt = formats.read_label_image(gt_path)
                matrices.append(
                    metrics.confusion(pred, gt, merge=config.merge, allow_pred_void=True)
                )
                total += pred.classes.size
                void += int(np.count_nonzero(pred.classes == 0))
            cm = metrics.accumulate_confusion(matrices)
            report = metrics.iou_report(cm)
            nonvoid = 1.0 - void / total
            text = format_report(report, nonvoid_fraction=nonvoid)
            formats.atomic_write_bytes(stage / "eval.txt", text.encode("ascii"))

        rel_paths = sorted(
            str(p.relative_to(stage)) for p in stage.rglob("*") if p.is_file()
        )
        header = {
            "channels": config.channels,
            "merge": config.merge,
            "voxel_size": repr(config.voxel_size),
            "meters_per_pixel": repr(config.meters_per_pixel),
            "frames": len(emitted),
        }
        formats.write_manifest(stage, rel_paths, stage / "manifest.txt", header)

    return {
        "output_dir": config.output_dir,
        "frames": emitted,
        "report": report,
        "nonvoid_fraction": nonvoid,
    }
