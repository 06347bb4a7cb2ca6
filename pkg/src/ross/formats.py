"""Readers and writers for every on-disk artifact.

Formats:
  point cloud   little-endian binary, 16 bytes/point (float32 x, y, z,
                intensity), plus a parallel uint32 .label file and a
                .meta sidecar carrying the timestamp
  trajectory    text, one `timestamp tx ty tz qx qy qz qw` per line
  radar scan    16-bit grayscale PNG (rows = azimuth, cols = range bins)
                with a `key = value` sidecar: range_resolution,
                azimuth_0_direction, timestamp
  BEV image     16-bit grayscale PNG + sidecar: meters_per_pixel,
                center_row, center_col
  label image   8-bit grayscale PNG, values 0..3, same sidecar keys
  calibration   single text line `tx ty tz qx qy qz qw` plus an
                `# rms_residual = ...` comment
  voxel map     binary: header voxel_size + origin (4 float64 LE), then
                28-byte records (i, j, k int32; 4 class counts uint32)
  manifest      `# key = value` header lines, then `sha256  relpath` lines

Every reader raises FormatError on malformed input, never anything else.
Writers are atomic: a temp file in the target directory is renamed over
the destination, so a crash never leaves a partial artifact in place.
"""

from __future__ import annotations

import hashlib
import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, RossError
from .fusion import VoxelLabelMap
from .geometry import RigidTransform, StampedPose

__all__ = [
    "LabeledCloud",
    "RadarFrame",
    "BevImage",
    "LabelImage",
    "read_cloud",
    "write_cloud",
    "read_trajectory",
    "write_trajectory",
    "read_radar_frame",
    "write_radar_frame",
    "read_bev",
    "write_bev",
    "read_label_image",
    "write_label_image",
    "read_calibration",
    "write_calibration",
    "read_voxel_map",
    "write_voxel_map",
    "read_sidecar",
    "write_sidecar",
    "sidecar_path",
    "label_path_for",
    "meta_path_for",
    "write_manifest",
    "read_manifest",
    "file_sha256",
    "atomic_write_bytes",
]

_POINT_DTYPE = np.dtype("<f4")
_LABEL_DTYPE = np.dtype("<u4")
_POINT_RECORD = 16


@dataclass
class LabeledCloud:
    """One LIDAR scan: (N, 4) float points (x, y, z, intensity), uint32 labels."""

    points: np.ndarray
    labels: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points)
        if self.points.size == 0:
            self.points = self.points.reshape(0, 4)
        if self.points.ndim != 2 or self.points.shape[1] != 4:
            raise FormatError(f"cloud points must be (N, 4), got {self.points.shape}")
        self.labels = np.asarray(self.labels, dtype=np.uint32).reshape(-1)
        if len(self.labels) != len(self.points):
            raise FormatError(
                f"{len(self.points)} points but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]


@dataclass
class RadarFrame:
    """Polar radar scan: energy[azimuth, range_bin] uint16 plus geometry."""

    energy: np.ndarray
    range_resolution: float
    azimuth_0_direction: float = 0.0
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        self.energy = np.asarray(self.energy, dtype=np.uint16)
        if self.energy.ndim != 2 or self.energy.shape[0] < 1 or self.energy.shape[1] < 1:
            raise FormatError(f"radar energy must be 2D non-empty, got {self.energy.shape}")
        if self.range_resolution <= 0:
            raise FormatError(f"range_resolution must be positive, got {self.range_resolution}")

    @property
    def n_azimuth(self) -> int:
        return self.energy.shape[0]

    @property
    def n_range_bins(self) -> int:
        return self.energy.shape[1]

    @property
    def azimuth_step(self) -> float:
        return 2.0 * np.pi / self.n_azimuth

    def azimuth_of_row(self, a: int) -> float:
        return self.azimuth_0_direction + a * self.azimuth_step


@dataclass
class BevImage:
    """Cartesian top-down raster; pixel (r, c) covers x=(c-cc)*mpp, y=(cr-r)*mpp."""

    pixels: np.ndarray
    meters_per_pixel: float
    center_pixel: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2:
            raise FormatError(f"BEV pixels must be 2D, got shape {self.pixels.shape}")
        if self.meters_per_pixel <= 0:
            raise FormatError(f"meters_per_pixel must be positive, got {self.meters_per_pixel}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass
class LabelImage:
    """Per-pixel merged class ids (0..3) on the same BEV pixel grid."""

    classes: np.ndarray
    meters_per_pixel: float
    center_pixel: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        self.classes = np.asarray(self.classes, dtype=np.uint8)
        if self.classes.ndim != 2:
            raise FormatError(f"label image must be 2D, got shape {self.classes.shape}")
        if self.classes.size and self.classes.max() > 3:
            raise FormatError(
                f"label image values must be in 0..3, found {int(self.classes.max())}"
            )
        if self.meters_per_pixel <= 0:
            raise FormatError(f"meters_per_pixel must be positive, got {self.meters_per_pixel}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.classes.shape


def atomic_write_bytes(path, data: bytes) -> None:
    """Write data to path via a same-directory temp file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _guard(fn):
    """Turn any non-Ross exception escaping a reader into a FormatError."""

    def wrapped(path, *args, **kwargs):
        try:
            return fn(path, *args, **kwargs)
        except RossError:
            raise
        except Exception as exc:
            raise FormatError(f"{path}: {exc}") from exc

    return wrapped


def label_path_for(points_path) -> Path:
    return Path(points_path).with_suffix(".label")


def meta_path_for(points_path) -> Path:
    return Path(points_path).with_suffix(".meta")


def sidecar_path(image_path) -> Path:
    return Path(image_path).with_suffix(".txt")


def _parse_kv(text: str, source: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_sidecar(path, required=()) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"missing sidecar {path}")
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    kv = _parse_kv(text, str(path))
    for key in required:
        if key not in kv:
            raise FormatError(f"{path}: missing required key {key!r}")
    return kv


def write_sidecar(path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def _kv_float(kv: dict[str, str], key: str, source) -> float:
    try:
        value = float(kv[key])
    except ValueError as exc:
        raise FormatError(f"{source}: bad float for {key!r}: {kv[key]!r}") from exc
    if not np.isfinite(value):
        raise FormatError(f"{source}: non-finite {key!r}")
    return value


@_guard
def read_cloud(path, label_path=None, meta_path=None) -> LabeledCloud:
    """Read a point cloud (.bin) with its .label and .meta companions."""
    path = Path(path)
    label_path = Path(label_path) if label_path else label_path_for(path)
    meta_path = Path(meta_path) if meta_path else meta_path_for(path)
    if not path.exists():
        raise FormatError(f"no such cloud file {path}")
    raw = path.read_bytes()
    if len(raw) % _POINT_RECORD:
        raise FormatError(
            f"{path}: truncated at byte {len(raw) - len(raw) % _POINT_RECORD}: "
            f"size {len(raw)} is not a multiple of {_POINT_RECORD}"
        )
    points = np.frombuffer(raw, dtype=_POINT_DTYPE).reshape(-1, 4).copy()
    if not label_path.exists():
        raise FormatError(f"missing label file {label_path}")
    lraw = label_path.read_bytes()
    if len(lraw) % 4:
        raise FormatError(
            f"{label_path}: truncated at byte {len(lraw) - len(lraw) % 4}: "
            f"size {len(lraw)} is not a multiple of 4"
        )
    labels = np.frombuffer(lraw, dtype=_LABEL_DTYPE).copy()
    if len(labels) != len(points):
        raise FormatError(
            f"{path}: {len(points)} points but {label_path} has {len(labels)} labels"
        )
    if not np.all(np.isfinite(points[:, :3])):
        raise FormatError(f"{path}: non-finite coordinates")
    timestamp = 0.0
    if meta_path.exists():
        kv = _parse_kv(meta_path.read_text(), str(meta_path))
        if "timestamp" in kv:
            timestamp = _kv_float(kv, "timestamp", meta_path)
    return LabeledCloud(points=points, labels=labels, timestamp=timestamp)


def write_cloud(cloud: LabeledCloud, path, label_path=None, meta_path=None) -> None:
    path = Path(path)
    label_path = Path(label_path) if label_path else label_path_for(path)
    meta_path = Path(meta_path) if meta_path else meta_path_for(path)
    points = np.ascontiguousarray(cloud.points, dtype=_POINT_DTYPE)
    if points.size and not np.all(np.isfinite(points[:, :3])):
        raise FormatError("refusing to write non-finite coordinates")
    atomic_write_bytes(path, points.tobytes())
    atomic_write_bytes(label_path, np.ascontiguousarray(cloud.labels, dtype=_LABEL_DTYPE).tobytes())
    write_sidecar(meta_path, {"timestamp": repr(float(cloud.timestamp))})


@_guard
def read_trajectory(path) -> list[StampedPose]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such trajectory file {path}")
    poses: list[StampedPose] = []
    prev_t = None
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 8:
            raise FormatError(f"{path}:{lineno}: expected 8 fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite(vals)):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        t, tx, ty, tz, qx, qy, qz, qw = vals
        qnorm = np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
        if abs(qnorm - 1.0) > 1e-3:
            raise FormatError(f"{path}:{lineno}: quaternion norm {qnorm:.6f} too far from 1")
        if prev_t is not None and t <= prev_t:
            raise FormatError(
                f"{path}:{lineno}: timestamp {t} does not increase past {prev_t}"
            )
        prev_t = t
        pose = RigidTransform(np.array([qw, qx, qy, qz]), np.array([tx, ty, tz]))
        poses.append(StampedPose(timestamp=t, pose=pose))
    if not poses:
        raise FormatError(f"{path}: no poses")
    return poses


def write_trajectory(poses, path) -> None:
    lines = []
    for sp in poses:
        q = sp.pose.quaternion
        t = sp.pose.translation
        fields = [sp.timestamp, t[0], t[1], t[2], q[1], q[2], q[3], q[0]]
        lines.append(" ".join(repr(float(v)) for v in fields))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def _read_png(path, expect16: bool) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such image {path}")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            arr = np.asarray(img)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise FormatError(f"{path}: not a readable image: {exc}") from exc
    if expect16:
        if arr.dtype != np.uint16 or not mode.startswith("I;16"):
            raise FormatError(f"{path}: expected 16-bit grayscale PNG, got mode {mode}")
    else:
        if mode != "L" or arr.dtype != np.uint8:
            raise FormatError(f"{path}: expected 8-bit grayscale PNG, got mode {mode}")
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected single-channel image")
    return arr.copy()


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


@_guard
def read_radar_frame(path) -> RadarFrame:
    arr = _read_png(path, expect16=True)
    kv = read_sidecar(
        sidecar_path(path),
        required=("range_resolution", "azimuth_0_direction", "timestamp"),
    )
    sc = sidecar_path(path)
    res = _kv_float(kv, "range_resolution", sc)
    if res <= 0:
        raise FormatError(f"{sc}: range_resolution must be positive")
    return RadarFrame(
        energy=arr,
        range_resolution=res,
        azimuth_0_direction=_kv_float(kv, "azimuth_0_direction", sc),
        timestamp=_kv_float(kv, "timestamp", sc),
    )


def write_radar_frame(frame: RadarFrame, path) -> None:
    atomic_write_bytes(path, _png_bytes(np.ascontiguousarray(frame.energy, dtype=np.uint16)))
    write_sidecar(
        sidecar_path(path),
        {
            "range_resolution": repr(float(frame.range_resolution)),
            "azimuth_0_direction": repr(float(frame.azimuth_0_direction)),
            "timestamp": repr(float(frame.timestamp)),
        },
    )


def _read_raster_sidecar(path):
    sc = sidecar_path(path)
    kv = read_sidecar(sc, required=("meters_per_pixel", "center_row", "center_col"))
    mpp = _kv_float(kv, "meters_per_pixel", sc)
    if mpp <= 0:
        raise FormatError(f"{sc}: meters_per_pixel must be positive")
    return mpp, (_kv_float(kv, "center_row", sc), _kv_float(kv, "center_col", sc))


def _write_raster_sidecar(path, mpp: float, center) -> None:
    write_sidecar(
        sidecar_path(path),
        {
            "meters_per_pixel": repr(float(mpp)),
            "center_row": repr(float(center[0])),
            "center_col": repr(float(center[1])),
        },
    )


@_guard
def read_bev(path) -> BevImage:
    arr = _read_png(path, expect16=True)
    mpp, center = _read_raster_sidecar(path)
    return BevImage(pixels=arr, meters_per_pixel=mpp, center_pixel=center)


def write_bev(bev: BevImage, path) -> None:
    if bev.pixels.dtype != np.uint16:
        raise FormatError(f"only uint16 BEV images are written to disk, got {bev.pixels.dtype}")
    atomic_write_bytes(path, _png_bytes(np.ascontiguousarray(bev.pixels)))
    _write_raster_sidecar(path, bev.meters_per_pixel, bev.center_pixel)


@_guard
def read_label_image(path) -> LabelImage:
    arr = _read_png(path, expect16=False)
    if arr.size and arr.max() > 3:
        raise FormatError(f"{path}: label values must be 0..3, found {int(arr.max())}")
    mpp, center = _read_raster_sidecar(path)
    return LabelImage(classes=arr, meters_per_pixel=mpp, center_pixel=center)


def write_label_image(img: LabelImage, path) -> None:
    atomic_write_bytes(path, _png_bytes(np.ascontiguousarray(img.classes, dtype=np.uint8)))
    _write_raster_sidecar(path, img.meters_per_pixel, img.center_pixel)


@_guard
def read_calibration(path) -> tuple[RigidTransform, float]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such calibration file {path}")
    rms = float("nan")
    transform = None
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            kv = line.lstrip("#").strip()
            if kv.startswith("rms_residual"):
                _, _, value = kv.partition("=")
                try:
                    rms = float(value.strip())
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: bad rms_residual") from exc
            continue
        if not line:
            continue
        if transform is not None:
            raise FormatError(f"{path}:{lineno}: more than one transform line")
        parts = line.split()
        if len(parts) != 7:
            raise FormatError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        try:
            tx, ty, tz, qx, qy, qz, qw = (float(p) for p in parts)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite([tx, ty, tz, qx, qy, qz, qw])):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        qnorm = np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
        if abs(qnorm - 1.0) > 1e-3:
            raise FormatError(f"{path}:{lineno}: quaternion norm {qnorm:.6f} too far from 1")
        transform = RigidTransform(np.array([qw, qx, qy, qz]), np.array([tx, ty, tz]))
    if transform is None:
        raise FormatError(f"{path}: no transform line")
    return transform, rms


def write_calibration(extrinsic: RigidTransform, rms_residual: float, path) -> None:
    q = extrinsic.quaternion
    t = extrinsic.translation
    fields = [t[0], t[1], t[2], q[1], q[2], q[3], q[0]]
    text = (
        f"# rms_residual = {repr(float(rms_residual))}\n"
        + " ".join(repr(float(v)) for v in fields)
        + "\n"
    )
    atomic_write_bytes(path, text.encode())


_MAP_HEADER = np.dtype("<f8")
_MAP_RECORD = np.dtype([("ijk", "<i4", 3), ("counts", "<u4", 4)])


@_guard
def read_voxel_map(path) -> VoxelLabelMap:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such map file {path}")
    raw = path.read_bytes()
    if len(raw) < 32:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes, need 32)")
    header = np.frombuffer(raw[:32], dtype=_MAP_HEADER)
    voxel_size = float(header[0])
    origin = np.array(header[1:4])
    if not np.isfinite(voxel_size) or voxel_size <= 0:
        raise FormatError(f"{path}: bad voxel_size {voxel_size}")
    if not np.all(np.isfinite(origin)):
        raise FormatError(f"{path}: non-finite origin")
    body = raw[32:]
    if len(body) % _MAP_RECORD.itemsize:
        raise FormatError(
            f"{path}: truncated at byte {32 + len(body) - len(body) % _MAP_RECORD.itemsize}: "
            f"body is not a multiple of {_MAP_RECORD.itemsize}"
        )
    records = np.frombuffer(body, dtype=_MAP_RECORD)
    indices = records["ijk"].astype(np.int64)
    counts = records["counts"].astype(np.uint64)
    return VoxelLabelMap(voxel_size=voxel_size, origin=origin, indices=indices, counts=counts)


def write_voxel_map(vmap: VoxelLabelMap, path) -> None:
    if np.any(np.abs(vmap.indices) > np.iinfo(np.int32).max):
        raise FormatError("voxel indices exceed int32 range")
    if vmap.counts.size and vmap.counts.max() > np.iinfo(np.uint32).max:
        raise FormatError("voxel counts exceed uint32 range")
    header = np.array([vmap.voxel_size, *vmap.origin], dtype=_MAP_HEADER)
    records = np.zeros(len(vmap.indices), dtype=_MAP_RECORD)
    records["ijk"] = vmap.indices
    records["counts"] = vmap.counts
    atomic_write_bytes(path, header.tobytes() + records.tobytes())


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(root, rel_paths, path, header: dict | None = None) -> None:
    """Hash files (paths relative to root) into a sorted manifest at path."""
    root = Path(root)
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    for rel in sorted(str(p) for p in rel_paths):
        lines.append(f"{file_sha256(root / rel)}  {rel}")
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


@_guard
def read_manifest(path) -> tuple[dict[str, str], dict[str, str]]:
    """Return (header dict, {relpath: sha256})."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such manifest {path}")
    header: dict[str, str] = {}
    hashes: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                k, _, v = body.partition("=")
                header[k.strip()] = v.strip()
            continue
        parts = line.split(None, 1)
        if len(parts) != 2 or len(parts[0]) != 64:
            raise FormatError(f"{path}:{lineno}: expected '<sha256>  <path>'")
        hashes[parts[1].strip()] = parts[0]
    return header, hashes
