"""Deterministic synthetic off-road scenes with exactly known ground truth.

The scene is a sloped ground plane with bush discs and box obstacles.
LIDAR returns are sampled on the voxel-center lattice and every scene
quantity is a dyadic rational, so the whole pipeline runs without a single
floating-point rounding step and label transfer can be checked bit-exactly
against the analytic ground truth rendered here.

Randomness (label variants, extra returns, radar noise) comes from one
PCG64 stream consumed in a fixed order, so identical specs give
byte-identical outputs.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .formats import LabeledCloud, LabelImage, RadarFrame
from .geometry import RigidTransform, StampedPose

__all__ = [
    "SceneSpec",
    "SceneData",
    "generate_scene",
    "load_scene_spec",
    "write_scene_spec",
    "write_scene",
]

# fine-grained label ids drawn for each surface class
_GROUND_IDS = (1, 4, 5)  # dirt, grass, asphalt
_BUSH_IDS = (2,)
_OBSTACLE_IDS = (3, 9, 16)  # tree, vehicle, fence
_VOID_IDS = (0, 18, 19)  # void, water, sky


@dataclass(frozen=True)
class SceneSpec:
    """Full description of a synthetic scene; every default is pipeline-safe.

    Geometry values should stay on the 1/2^k grid (they are by default):
    that is what makes the generated data close bit-exactly through the
    pipeline. Intensity statistics are free.
    """

    seed: int = 12345
    extent: float = 60.0
    ground_base: float = 0.3125
    ground_slope: tuple[float, float] = (0.015625, 0.0)
    # (cx, cy, radius, height)
    bushes: tuple = ((6.0, 4.0, 2.0, 0.75), (12.0, -5.0, 2.5, 0.75), (16.0, 6.0, 1.5, 0.75))
    # (cx, cy, width_x, width_y, height)
    boxes: tuple = ((9.0, -2.0, 2.0, 1.5, 2.0), (15.0, 3.0, 1.5, 1.5, 2.0))
    lidar_range: float = 18.0
    lidar_height: float = 1.2
    extra_returns: int = 2
    void_fraction: float = 0.05
    scan_count: int = 20
    scan_start: tuple[float, float] = (0.0, 0.0)
    scan_step: tuple[float, float] = (1.0, 0.0)
    t0: float = 0.0
    dt: float = 0.5
    n_azimuth: int = 180
    n_range_bins: int = 60
    range_resolution: float = 0.5
    azimuth_0: float = 0.0
    # lidar -> radar translation (rotation is identity)
    extrinsic: tuple[float, float, float] = (0.5, 0.0, 0.4)
    mpp: float = 0.5
    bev_size: tuple[int, int] = (160, 160)
    voxel_size: float = 0.25
    z_band: tuple[float, float] = (-1.0, 3.0)
    # per-merged-class energy model: (mean, std)
    ground_energy: tuple[float, float] = (16000.0, 2500.0)
    bushes_energy: tuple[float, float] = (18000.0, 2500.0)
    obstacles_energy: tuple[float, float] = (20000.0, 5800.0)
    background_energy: tuple[float, float] = (3000.0, 1200.0)

    def validate(self) -> None:
        if self.extent <= 0:
            raise ConfigError(f"scene extent must be positive, got {self.extent}")
        if self.scan_count < 1:
            raise ConfigError(f"need at least one scan, got {self.scan_count}")
        if self.voxel_size <= 0 or self.mpp <= 0:
            raise ConfigError("voxel_size and mpp must be positive")
        if self.lidar_range <= 0:
            raise ConfigError(f"lidar_range must be positive, got {self.lidar_range}")
        if self.n_azimuth < 1 or self.n_range_bins < 1:
            raise ConfigError("radar grid must be at least 1x1")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.extra_returns < 0:
            raise ConfigError("extra_returns must be >= 0")
        if not 0.0 <= self.void_fraction <= 1.0:
            raise ConfigError("void_fraction must be in [0, 1]")


@dataclass
class SceneData:
    spec: SceneSpec
    scans: list
    traj: list
    extrinsic: RigidTransform
    radar_frames: list
    gt_label_images: list


def load_scene_spec(path) -> SceneSpec:
    """Read a scene description from an INI file; absent keys keep defaults."""
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read scene spec {path}")
    base = SceneSpec()
    kw = {}

    def _get(section, key, cast, current):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return cast(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for [{section}] {key}: {raw}") from exc
        return current

    def _pair(raw):
        parts = raw.split()
        if len(parts) != 2:
            raise ValueError(raw)
        return (float(parts[0]), float(parts[1]))

    kw["seed"] = _get("scene", "seed", int, base.seed)
    kw["extent"] = _get("scene", "extent", float, base.extent)
    kw["ground_base"] = _get("scene", "ground_base", float, base.ground_base)
    kw["ground_slope"] = _get("scene", "ground_slope", _pair, base.ground_slope)
    kw["void_fraction"] = _get("scene", "void_fraction", float, base.void_fraction)
    kw["lidar_range"] = _get("lidar", "range", float, base.lidar_range)
    kw["lidar_height"] = _get("lidar", "height", float, base.lidar_height)
    kw["extra_returns"] = _get("lidar", "extra_returns", int, base.extra_returns)
    kw["scan_count"] = _get("scan", "count", int, base.scan_count)
    kw["scan_start"] = _get("scan", "start", _pair, base.scan_start)
    kw["scan_step"] = _get("scan", "step", _pair, base.scan_step)
    kw["t0"] = _get("scan", "t0", float, base.t0)
    kw["dt"] = _get("scan", "dt", float, base.dt)
    kw["n_azimuth"] = _get("radar", "n_azimuth", int, base.n_azimuth)
    kw["n_range_bins"] = _get("radar", "n_range_bins", int, base.n_range_bins)
    kw["range_resolution"] = _get("radar", "range_resolution", float, base.range_resolution)
    kw["azimuth_0"] = _get("radar", "azimuth_0", float, base.azimuth_0)
    kw["mpp"] = _get("bev", "meters_per_pixel", float, base.mpp)
    if parser.has_option("bev", "size"):
        parts = parser.get("bev", "size").split()
        if len(parts) != 2:
            raise ConfigError(f"{path}: [bev] size wants two integers")
        kw["bev_size"] = (int(parts[0]), int(parts[1]))
    kw["voxel_size"] = _get("fusion", "voxel_size", float, base.voxel_size)
    kw["z_band"] = _get("fusion", "z_band", _pair, base.z_band)
    if parser.has_option("sensors", "extrinsic"):
        parts = parser.get("sensors", "extrinsic").split()
        if len(parts) != 3:
            raise ConfigError(f"{path}: [sensors] extrinsic wants three floats")
        kw["extrinsic"] = tuple(float(v) for v in parts)
    for name in ("ground", "bushes", "obstacles", "background"):
        kw[f"{name}_energy"] = _get("intensity", name, _pair, getattr(base, f"{name}_energy"))

    def _rows(section, width):
        if not parser.has_section(section):
            return None
        rows = []
        for key in sorted(parser.options(section)):
            parts = parser.get(section, key).split()
            if len(parts) != width:
                raise ConfigError(f"{path}: [{section}] {key} wants {width} floats")
            rows.append(tuple(float(v) for v in parts))
        return tuple(rows)

    bushes = _rows("bushes", 4)
    if bushes is not None:
        kw["bushes"] = bushes
    boxes = _rows("boxes", 5)
    if boxes is not None:
        kw["boxes"] = boxes
    return SceneSpec(**kw)


def write_scene_spec(spec: SceneSpec, path) -> None:
    """Write the fully resolved scene description as an INI file."""
    lines = [
        "[scene]",
        f"seed = {spec.seed}",
        f"extent = {spec.extent!r}",
        f"ground_base = {spec.ground_base!r}",
        f"ground_slope = {spec.ground_slope[0]!r} {spec.ground_slope[1]!r}",
        f"void_fraction = {spec.void_fraction!r}",
        "",
        "[lidar]",
        f"range = {spec.lidar_range!r}",
        f"height = {spec.lidar_height!r}",
        f"extra_returns = {spec.extra_returns}",
        "",
        "[scan]",
        f"count = {spec.scan_count}",
        f"start = {spec.scan_start[0]!r} {spec.scan_start[1]!r}",
        f"step = {spec.scan_step[0]!r} {spec.scan_step[1]!r}",
        f"t0 = {spec.t0!r}",
        f"dt = {spec.dt!r}",
        "",
        "[radar]",
        f"n_azimuth = {spec.n_azimuth}",
        f"n_range_bins = {spec.n_range_bins}",
        f"range_resolution = {spec.range_resolution!r}",
        f"azimuth_0 = {spec.azimuth_0!r}",
        "",
        "[sensors]",
        f"extrinsic = {spec.extrinsic[0]!r} {spec.extrinsic[1]!r} {spec.extrinsic[2]!r}",
        "",
        "[bev]",
        f"meters_per_pixel = {spec.mpp!r}",
        f"size = {spec.bev_size[0]} {spec.bev_size[1]}",
        "",
        "[fusion]",
        f"voxel_size = {spec.voxel_size!r}",
        f"z_band = {spec.z_band[0]!r} {spec.z_band[1]!r}",
        "",
        "[intensity]",
        f"ground = {spec.ground_energy[0]!r} {spec.ground_energy[1]!r}",
        f"bushes = {spec.bushes_energy[0]!r} {spec.bushes_energy[1]!r}",
        f"obstacles = {spec.obstacles_energy[0]!r} {spec.obstacles_energy[1]!r}",
        f"background = {spec.background_energy[0]!r} {spec.background_energy[1]!r}",
        "",
        "[bushes]",
    ]
    for i, row in enumerate(spec.bushes):
        lines.append(f"b{i:02d} = " + " ".join(repr(v) for v in row))
    lines += ["", "[boxes]"]
    for i, row in enumerate(spec.boxes):
        lines.append(f"b{i:02d} = " + " ".join(repr(v) for v in row))
    from .formats import atomic_write_bytes

    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def _site_lattice(spec: SceneSpec):
    s = spec.voxel_size
    half = int(np.floor(spec.extent / 2.0 / s))
    idx = np.arange(-half, half, dtype=np.int64)
    coords = (idx.astype(np.float64) + 0.5) * s
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    return gx.ravel(), gy.ravel()


def _surface(spec: SceneSpec, x: np.ndarray, y: np.ndarray):
    """Class (1/2/3) and top height for each ground location."""
    z = spec.ground_base + spec.ground_slope[0] * x + spec.ground_slope[1] * y
    cls = np.ones(x.shape, dtype=np.uint8)
    top = z.copy()
    for cx, cy, radius, height in spec.bushes:
        inside = (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius
        cls[inside] = 2
        np.maximum(top, np.where(inside, z + height, -np.inf), out=top)
    for cx, cy, wx, wy, height in spec.boxes:
        inside = (np.abs(x - cx) <= wx / 2.0) & (np.abs(y - cy) <= wy / 2.0)
        cls[inside] = 3
        np.maximum(top, np.where(inside, z + height, -np.inf), out=top)
    return cls, top


def _scan_positions(spec: SceneSpec) -> np.ndarray:
    k = np.arange(spec.scan_count, dtype=np.float64)
    px = spec.scan_start[0] + k * spec.scan_step[0]
    py = spec.scan_start[1] + k * spec.scan_step[1]
    return np.stack([px, py], axis=1)


_FINE_IDS = {1: _GROUND_IDS, 2: _BUSH_IDS, 3: _OBSTACLE_IDS}


def _energy_model(spec: SceneSpec):
    return {
        0: spec.background_energy,
        1: spec.ground_energy,
        2: spec.bushes_energy,
        3: spec.obstacles_energy,
    }


def generate_scene(spec: SceneSpec) -> SceneData:
    """Build scans, trajectory, radar frames, and analytic GT label images."""
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    sx, sy = _site_lattice(spec)
    site_cls, site_top = _surface(spec, sx, sy)
    positions = _scan_positions(spec)
    times = spec.t0 + np.arange(spec.scan_count, dtype=np.float64) * spec.dt
    range2 = spec.lidar_range * spec.lidar_range

    energy_model = _energy_model(spec)
    mean_by_cls = np.array([energy_model[c][0] for c in range(4)])
    std_by_cls = np.array([energy_model[c][1] for c in range(4)])

    scans = []
    traj = []
    covered = np.zeros(len(sx), dtype=bool)
    for k in range(spec.scan_count):
        px, py = positions[k]
        in_range = (sx - px) ** 2 + (sy - py) ** 2 <= range2
        covered |= in_range
        cls_k = site_cls[in_range]
        x_k = sx[in_range]
        y_k = sy[in_range]
        z_k = site_top[in_range]
        n = len(x_k)

        fine = np.empty(n, dtype=np.uint32)
        for c, ids in _FINE_IDS.items():
            sel = cls_k == c
            fine[sel] = rng.choice(np.array(ids, dtype=np.uint32), size=int(sel.sum()))
        extra = rng.integers(0, spec.extra_returns + 1, size=n)
        void_extra = rng.random(n) < spec.void_fraction

        rep = 1 + extra + void_extra.astype(np.int64)
        xs = np.repeat(x_k, rep)
        ys = np.repeat(y_k, rep)
        zs = np.repeat(z_k, rep)
        cls_rep = np.repeat(cls_k, rep)
        labels = np.repeat(fine, rep)
        # the last replicate of a site with a void extra gets a void-family id
        ends = np.cumsum(rep) - 1
        void_rows = ends[void_extra]
        labels[void_rows] = rng.choice(np.array(_VOID_IDS, dtype=np.uint32), size=len(void_rows))

        energy = rng.normal(size=len(xs)) * std_by_cls[cls_rep] + mean_by_cls[cls_rep]
        intensity = np.clip(np.floor(energy + 0.5), 0.0, 65535.0)

        pts = np.empty((len(xs), 4), dtype=np.float32)
        pts[:, 0] = xs - px
        pts[:, 1] = ys - py
        pts[:, 2] = zs - spec.lidar_height
        pts[:, 3] = intensity
        scans.append(LabeledCloud(points=pts, labels=labels, timestamp=float(times[k])))
        traj.append(
            StampedPose(
                timestamp=float(times[k]),
                pose=RigidTransform(
                    np.array([1.0, 0.0, 0.0, 0.0]),
                    np.array([px, py, spec.lidar_height]),
                ),
            )
        )

    extrinsic = RigidTransform(np.array([1.0, 0.0, 0.0, 0.0]), np.array(spec.extrinsic))
    radar_z = spec.lidar_height - spec.extrinsic[2]

    radar_frames = []
    step = 2.0 * np.pi / spec.n_azimuth
    bins = np.arange(spec.n_range_bins, dtype=np.float64) * spec.range_resolution
    half_extent = spec.extent / 2.0
    for k in range(spec.scan_count):
        rx = positions[k, 0] - spec.extrinsic[0]
        ry = positions[k, 1] - spec.extrinsic[1]
        theta = spec.azimuth_0 + np.arange(spec.n_azimuth, dtype=np.float64) * step
        wx = rx + np.outer(np.cos(theta), bins)
        wy = ry + np.outer(np.sin(theta), bins)
        cell_cls, _ = _surface(spec, wx, wy)
        outside = (np.abs(wx) > half_extent) | (np.abs(wy) > half_extent)
        cell_cls[outside] = 0
        # box occlusion: cells beyond the first contiguous box run are shadowed
        for a in range(spec.n_azimuth):
            row = cell_cls[a]
            hits = np.nonzero(row == 3)[0]
            if len(hits) == 0:
                continue
            first = hits[0]
            run_end = first
            while run_end + 1 < len(row) and row[run_end + 1] == 3:
                run_end += 1
            row[run_end + 1 :] = 0
        noise = rng.normal(size=cell_cls.shape)
        energy = noise * std_by_cls[cell_cls] + mean_by_cls[cell_cls]
        energy = np.clip(np.floor(energy + 0.5), 0.0, 65535.0).astype(np.uint16)
        radar_frames.append(
            RadarFrame(
                energy=energy,
                range_resolution=spec.range_resolution,
                azimuth_0_direction=spec.azimuth_0,
                timestamp=float(times[k]),
            )
        )

    # analytic ground truth, via the documented raster convention only
    rows, cols = spec.bev_size
    cr, cc = rows // 2, cols // 2
    s = spec.voxel_size
    z32 = site_top.astype(np.float32).astype(np.float64)
    zq = (np.floor(z32 / s) + 0.5) * s
    gt_images = []
    for k in range(spec.scan_count):
        rx = positions[k, 0] - spec.extrinsic[0]
        ry = positions[k, 1] - spec.extrinsic[1]
        z_rel = zq - radar_z
        ok = (
            covered
            & (z_rel >= spec.z_band[0])
            & (z_rel <= spec.z_band[1])
        )
        c_idx = (cc + np.floor((sx[ok] - rx) / spec.mpp + 0.5)).astype(np.int64)
        r_idx = (cr - np.floor((sy[ok] - ry) / spec.mpp + 0.5)).astype(np.int64)
        inb = (r_idx >= 0) & (r_idx < rows) & (c_idx >= 0) & (c_idx < cols)
        img = np.zeros((rows, cols), dtype=np.uint8)
        np.maximum.at(img, (r_idx[inb], c_idx[inb]), site_cls[ok][inb])
        gt_images.append(
            LabelImage(classes=img, meters_per_pixel=spec.mpp, center_pixel=(cr, cc))
        )

    return SceneData(
        spec=spec,
        scans=scans,
        traj=traj,
        extrinsic=extrinsic,
        radar_frames=radar_frames,
        gt_label_images=gt_images,
    )


def write_scene(scene: SceneData, out_dir, channels: int = 1) -> None:
    """Write a scene to disk along with a run config wired to its files.

    Layout: scans/, radar/, gt/, trajectory.txt, calibration.txt,
    scene.ini (resolved spec), run.ini (batch config with output under
    out/), manifest.txt. Files appear at final paths only on success.
    """
    from .formats import (
        atomic_write_bytes,
        write_calibration,
        write_cloud,
        write_label_image,
        write_manifest,
        write_radar_frame,
        write_trajectory,
    )
    from .pipeline import staged_output

    if channels not in (1, 3):
        raise ConfigError(f"channels must be 1 or 3, got {channels}")
    spec = scene.spec
    with staged_output(out_dir) as stage:
        (stage / "scans").mkdir()
        (stage / "radar").mkdir()
        (stage / "gt").mkdir()
        for k, scan in enumerate(scene.scans):
            write_cloud(scan, stage / "scans" / f"frame_{k:06d}.bin")
        write_trajectory(scene.traj, stage / "trajectory.txt")
        write_calibration(scene.extrinsic, 0.0, stage / "calibration.txt")
        for k, frame in enumerate(scene.radar_frames):
            write_radar_frame(frame, stage / "radar" / f"frame_{k:06d}.png")
        for k, img in enumerate(scene.gt_label_images):
            write_label_image(img, stage / "gt" / f"frame_{k:06d}_label.png")
        write_scene_spec(spec, stage / "scene.ini")
        run = "\n".join(
            [
                "[paths]",
                "scans = scans",
                "trajectory = trajectory.txt",
                "calibration = calibration.txt",
                "radar = radar",
                "output = out",
                "eval_gt = gt",
                "",
                "[fusion]",
                f"voxel_size = {spec.voxel_size!r}",
                f"z_band = {spec.z_band[0]!r} {spec.z_band[1]!r}",
                "",
                "[bev]",
                f"meters_per_pixel = {spec.mpp!r}",
                f"size = {spec.bev_size[0]} {spec.bev_size[1]}",
                "",
                "[input]",
                f"channels = {channels}",
                "",
                "[eval]",
                "merge = cls3",
            ]
        ) + "\n"
        atomic_write_bytes(stage / "run.ini", run.encode("ascii"))
        rel = sorted(str(p.relative_to(stage)) for p in stage.rglob("*") if p.is_file())
        write_manifest(
            stage,
            rel,
            stage / "manifest.txt",
            {"seed": spec.seed, "frames": spec.scan_count},
        )
