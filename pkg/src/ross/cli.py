"""Command line front end.

One subcommand per stage (calibrate, fuse, project, analyze, cfar, eval,
synth, pipeline) plus `convert` for inspecting and validating stored
artifacts. Errors exit with 2 for bad configuration, 3 for malformed
files, 4 for data that fails a precondition.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, calibration, formats, fusion, metrics, projection, synth
from .errors import ConfigError, DataError, FormatError, RossError
from .geometry import interpolate_pose
from .pipeline import format_report, load_pipeline_config, run_pipeline
from .taxonomy import load_class_table

__all__ = ["cli", "main"]


def _parse_size(raw: str) -> tuple[int, int]:
    parts = raw.split()
    if len(parts) != 2:
        raise ConfigError(f"size wants two integers, got {raw!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_band(raw: str) -> tuple[float, float]:
    parts = raw.split()
    if len(parts) != 2:
        raise ConfigError(f"band wants two floats, got {raw!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_classes(raw: str) -> frozenset[int]:
    try:
        ids = frozenset(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad class list {raw!r}") from exc
    if not ids:
        raise ConfigError(f"empty class list {raw!r}")
    return ids


@click.group()
@click.version_option(package_name="ross")
def cli() -> None:
    """Transfer LIDAR semantic labels to radar BEV imagery."""


@cli.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def calibrate(pairs_path: str, out_path: str) -> None:
    """Estimate the planar LIDAR-to-radar extrinsic from target pairs.

    The pairs file has one correspondence per line: the LIDAR point (x y z)
    then the radar point (x y), five floats, # comments allowed.
    """
    pairs = []
    for lineno, raw in enumerate(Path(pairs_path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"{pairs_path}:{lineno}: expected 5 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"{pairs_path}:{lineno}: {exc}") from exc
        pairs.append(
            calibration.TargetCorrespondence(
                lidar_point=np.array(vals[:3]), radar_point=np.array(vals[3:])
            )
        )
    result = calibration.estimate_extrinsics(pairs)
    formats.write_calibration(result.extrinsic, result.rms_residual, out_path)
    click.echo(f"targets = {len(pairs)}")
    click.echo(f"rms_residual = {result.rms_residual:.6f}")


@cli.command()
@click.option("--scans", "scans_dir", required=True, type=click.Path(file_okay=False))
@click.option("--trajectory", "traj_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--voxel-size", default=0.25, show_default=True)
@click.option("--origin", default="0 0 0", show_default=True)
@click.option("--min-points", default=0, show_default=True)
@click.option("--class-table", "table_path", default=None, type=click.Path(dir_okay=False))
def fuse(scans_dir, traj_path, out_path, voxel_size, origin, min_points, table_path):
    """Accumulate labeled scans into a voxel map with majority-vote labels."""
    parts = origin.split()
    if len(parts) != 3:
        raise ConfigError(f"origin wants three floats, got {origin!r}")
    origin_xyz = tuple(float(v) for v in parts)
    table = load_class_table(table_path)
    paths = sorted(p for p in Path(scans_dir).iterdir() if p.suffix == ".bin")
    if not paths:
        raise DataError(f"no scans in {scans_dir}")
    scans = [formats.read_cloud(p) for p in paths]
    traj = formats.read_trajectory(traj_path)
    cloud = fusion.accumulate(scans, traj)
    vmap = fusion.build_voxel_map(
        cloud,
        class_table=table,
        voxel_size=voxel_size,
        origin=origin_xyz,
        min_points=min_points,
    )
    formats.write_voxel_map(vmap, out_path)
    click.echo(f"points = {len(cloud.points)}")
    click.echo(f"voxels = {len(vmap)}")


@cli.group()
def project() -> None:
    """Rasterize radar frames or fused maps into BEV images."""


@project.command("bev")
@click.option("--radar", "radar_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mpp", default=0.5, show_default=True)
@click.option("--size", default="512 512", show_default=True)
def project_bev(radar_path, out_path, mpp, size):
    """Resample one polar frame to a Cartesian BEV image."""
    frame = formats.read_radar_frame(radar_path)
    bev = projection.polar_to_bev(frame, mpp, size=_parse_size(size))
    formats.write_bev(bev, out_path)
    click.echo(f"wrote {out_path}")


@project.command("labels")
@click.option("--map", "map_path", required=True, type=click.Path(dir_okay=False))
@click.option("--trajectory", "traj_path", required=True, type=click.Path(dir_okay=False))
@click.option("--timestamp", required=True, type=float)
@click.option("--calibration", "calib_path", default=None, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mpp", default=0.5, show_default=True)
@click.option("--size", default="512 512", show_default=True)
@click.option("--z-band", default="-1 3", show_default=True)
def project_labels(map_path, traj_path, timestamp, calib_path, out_path, mpp, size, z_band):
    """Render a label image from a fused voxel map at one timestamp."""
    vmap = formats.read_voxel_map(map_path)
    traj = formats.read_trajectory(traj_path)
    extrinsic = None
    if calib_path is not None:
        extrinsic, _ = formats.read_calibration(calib_path)
    pose = interpolate_pose(traj, timestamp)
    img = projection.render_label_image(
        vmap,
        pose,
        lidar_to_radar=extrinsic,
        mpp=mpp,
        size=_parse_size(size),
        z_band=_parse_band(z_band),
    )
    formats.write_label_image(img, out_path)
    click.echo(f"wrote {out_path}")


def _bev_label_pairs(bev_dir: Path, labels_dir: Path):
    pairs = []
    for bev_path in sorted(Path(bev_dir).glob("frame_*.png")):
        if bev_path.stem.rpartition("_")[2].startswith("t"):
            continue  # warped history channels
        label_path = Path(labels_dir) / f"{bev_path.stem}_label.png"
        if not label_path.exists():
            raise DataError(f"no label image for {bev_path.name} in {labels_dir}")
        pairs.append((bev_path, label_path))
    if not pairs:
        raise DataError(f"no BEV frames in {bev_dir}")
    return pairs


@cli.command()
@click.option("--bev", "bev_dir", required=True, type=click.Path(file_okay=False))
@click.option("--labels", "labels_dir", required=True, type=click.Path(file_okay=False))
@click.option("--class-a", required=True, help="comma separated merged class ids")
@click.option("--class-b", required=True, help="comma separated merged class ids")
@click.option("--bins", default=256, show_default=True)
def analyze(bev_dir, labels_dir, class_a, class_b, bins):
    """Compare intensity distributions of two class sets and fit a threshold."""
    set_a = _parse_classes(class_a)
    set_b = _parse_classes(class_b)
    parts_a = []
    parts_b = []
    for bev_path, label_path in _bev_label_pairs(bev_dir, labels_dir):
        bev = formats.read_bev(bev_path)
        labels = formats.read_label_image(label_path)
        parts_a.append(analysis.intensity_histogram(bev, labels, set_a, n_bins=bins))
        parts_b.append(analysis.intensity_histogram(bev, labels, set_b, n_bins=bins))
    hist_a = analysis.merge_histograms(parts_a)
    hist_b = analysis.merge_histograms(parts_b)
    threshold, balanced = analysis.best_threshold(hist_a, hist_b)
    click.echo(f"samples_a = {hist_a.total}")
    click.echo(f"samples_b = {hist_b.total}")
    click.echo(f"threshold = {threshold}")
    click.echo(f"balanced_accuracy = {balanced:.6f}")


@cli.command()
@click.option("--radar", "radar_path", required=True, type=click.Path(dir_okay=False))
@click.option("--guard", default=2, show_default=True)
@click.option("--train", default=8, show_default=True)
@click.option("--scale", default=3.0, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def cfar(radar_path, guard, train, scale, out_path):
    """Detect point targets in a polar frame, one `azimuth bin` per line."""
    frame = formats.read_radar_frame(radar_path)
    hits = analysis.cfar_frame(frame, guard=guard, train=train, scale=scale)
    lines = [f"{a} {b}" for a, b in hits]
    if out_path is not None:
        formats.atomic_write_bytes(Path(out_path), ("\n".join(lines) + "\n").encode("ascii"))
    click.echo(f"detections = {len(hits)}")
    for line in lines:
        click.echo(line)


@cli.command("eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--merge",
    default="cls3",
    show_default=True,
    type=click.Choice(sorted(metrics.MERGE_MODES)),
)
def eval_cmd(pred_dir, gt_dir, merge):
    """Score predicted label images against ground truth ones by filename."""
    pred_paths = sorted(Path(pred_dir).glob("frame_*_label.png"))
    if not pred_paths:
        raise DataError(f"no label images in {pred_dir}")
    matrices = []
    total = 0
    void = 0
    for pred_path in pred_paths:
        gt_path = Path(gt_dir) / pred_path.name
        pred = formats.read_label_image(pred_path)
        gt = formats.read_label_image(gt_path)
        matrices.append(metrics.confusion(pred, gt, merge=merge, allow_pred_void=True))
        total += pred.classes.size
        void += int(np.count_nonzero(pred.classes == 0))
    report = metrics.iou_report(metrics.accumulate_confusion(matrices))
    click.echo(format_report(report, nonvoid_fraction=1.0 - void / total), nl=False)


@cli.command("synth")
@click.option("--spec", "spec_path", default=None, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--channels", default=1, show_default=True, type=int)
def synth_cmd(spec_path, out_dir, channels):
    """Generate a synthetic scene with bit-exactly known ground truth."""
    spec = synth.load_scene_spec(spec_path) if spec_path else synth.SceneSpec()
    scene = synth.generate_scene(spec)
    synth.write_scene(scene, out_dir, channels=channels)
    click.echo(f"frames = {spec.scan_count}")
    click.echo(f"wrote {out_dir}")


_SNIFF_KINDS = (
    "cloud",
    "voxel-map",
    "radar",
    "bev",
    "labels",
    "trajectory",
    "calibration",
    "manifest",
)


def _sniff_kind(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".bin":
        if formats.label_path_for(path).exists():
            return "cloud"
        size = path.stat().st_size
        if size >= 32 and (size - 32) % 28 == 0:
            return "voxel-map"
        return "cloud"
    if suffix == ".png":
        kv = formats.read_sidecar(formats.sidecar_path(path))
        if "range_resolution" in kv:
            return "radar"
        from PIL import Image

        with Image.open(path) as img:
            mode = img.mode
        return "labels" if mode == "L" else "bev"
    if suffix in (".txt", ".text"):
        for raw in path.read_text().splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "rms_residual" in line:
                    return "calibration"
                continue
            fields = line.split()
            if len(fields) == 8:
                return "trajectory"
            if len(fields) == 7:
                return "calibration"
            if len(fields) == 2 and len(fields[0]) == 64:
                return "manifest"
            break
        raise FormatError(f"cannot infer artifact kind of {path}")
    raise FormatError(f"cannot infer artifact kind of {path}")


def _describe(path: Path, kind: str) -> str:
    if kind == "cloud":
        cloud = formats.read_cloud(path)
        return f"{len(cloud.points)} points, t = {cloud.timestamp!r}"
    if kind == "voxel-map":
        vmap = formats.read_voxel_map(path)
        return f"{len(vmap)} voxels, voxel_size = {vmap.voxel_size!r}"
    if kind == "radar":
        frame = formats.read_radar_frame(path)
        return (
            f"{frame.n_azimuth} azimuths x {frame.n_range_bins} bins, "
            f"res = {frame.range_resolution!r}"
        )
    if kind == "bev":
        bev = formats.read_bev(path)
        h, w = bev.pixels.shape
        return f"{h}x{w}, mpp = {bev.meters_per_pixel!r}"
    if kind == "labels":
        img = formats.read_label_image(path)
        h, w = img.classes.shape
        counts = np.bincount(img.classes.ravel(), minlength=4)
        parts = ", ".join(f"{n} {name.lower()}" for n, name in zip(counts, ("void", "ground", "bushes", "obstacles")))
        return f"{h}x{w}, {parts}"
    if kind == "trajectory":
        poses = formats.read_trajectory(path)
        return f"{len(poses)} poses, t in [{poses[0].timestamp!r}, {poses[-1].timestamp!r}]"
    if kind == "calibration":
        extrinsic, rms = formats.read_calibration(path)
        tx, ty, tz = (float(v) for v in extrinsic.translation)
        return f"t = ({tx!r}, {ty!r}, {tz!r}), yaw = {float(extrinsic.yaw())!r}, rms = {rms!r}"
    if kind == "manifest":
        header, entries = formats.read_manifest(path)
        root = path.parent
        for rel, digest in entries.items():
            target = root / rel
            if not target.is_file():
                raise DataError(f"{path}: missing file {rel}")
            actual = formats.file_sha256(target)
            if actual != digest:
                raise DataError(f"{path}: checksum mismatch for {rel}")
        return f"{len(entries)} files verified"
    raise ConfigError(f"unknown kind {kind!r}")


@cli.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--kind", default=None, type=click.Choice(_SNIFF_KINDS))
@click.option("--check", is_flag=True, help="validate only, print one ok line per file")
def convert(paths, kind, check):
    """Inspect stored artifacts; with --check validate them and checksums."""
    for raw in paths:
        path = Path(raw)
        resolved = kind or _sniff_kind(path)
        detail = _describe(path, resolved)
        if check:
            click.echo(f"ok {resolved} {path}")
        else:
            click.echo(f"{path}: {resolved}, {detail}")


@cli.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--jobs", default=1, show_default=True)
def pipeline_cmd(config_path, jobs):
    """Run the full batch: fuse, render BEV + labels, evaluate, manifest."""
    config = load_pipeline_config(config_path)
    summary = run_pipeline(config, jobs=jobs)
    click.echo(f"frames = {len(summary['frames'])}")
    click.echo(f"output = {summary['output_dir']}")
    if summary["report"] is not None:
        click.echo(
            format_report(summary["report"], nonvoid_fraction=summary["nonvoid_fraction"]),
            nl=False,
        )


def main(argv=None) -> int:
    """Entry point wrapping the group with exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except FormatError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 4
    except RossError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
