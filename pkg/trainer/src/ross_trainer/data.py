"""Dataset access: the emitted files are the only interface.

Reads the manifest, 16-bit BEV PNGs, and 8-bit label PNGs a pipeline run
leaves behind, and writes label PNGs back in the same shape: image plus a
`key = value` sidecar next to it, written atomically.
"""

from __future__ import annotations

import hashlib
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DatasetError, FormatError, ShapeError

# label id 0 is Void: never trained on, never predicted
IGNORE = 255
TARGET_MAPS = {
    "cls3": {1: 0, 2: 1, 3: 2},
    "cls2-1": {1: 0, 2: 1, 3: 1},
    "cls2-2": {1: 0, 2: 0, 3: 1},
}
OUTPUT_IDS = {"cls3": (1, 2, 3), "cls2-1": (1, 2), "cls2-2": (1, 3)}


def sidecar_path(image_path) -> Path:
    return Path(image_path).with_suffix(".txt")


def read_sidecar(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text("ascii")
    except OSError as exc:
        raise FormatError(f"cannot read sidecar {path}: {exc}") from exc
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def read_bev(path) -> tuple[np.ndarray, dict[str, str]]:
    """Load a 16-bit BEV PNG and its sidecar."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            mode = img.mode
            arr = np.asarray(img)
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
    if mode not in ("I", "I;16") or arr.ndim != 2:
        raise FormatError(f"{path}: expected a 16-bit grayscale image")
    if arr.dtype != np.uint16:
        if arr.min() < 0 or arr.max() > 65535:
            raise FormatError(f"{path}: values outside the 16-bit range")
        arr = arr.astype(np.uint16)
    return arr, read_sidecar(sidecar_path(path))


def read_label_image(path) -> np.ndarray:
    path = Path(path)
    try:
        with Image.open(path) as img:
            arr = np.asarray(img)
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise FormatError(f"{path}: expected an 8-bit grayscale image")
    if arr.max(initial=0) > 3:
        raise FormatError(f"{path}: label values must be 0..3")
    return arr


def write_label_image(classes: np.ndarray, sidecar: dict, path) -> None:
    """Write an 8-bit label PNG plus its sidecar, atomically."""
    path = Path(path)
    classes = np.ascontiguousarray(classes, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(classes, mode="L").save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())
    lines = "".join(f"{k} = {v}\n" for k, v in sidecar.items())
    atomic_write_bytes(sidecar_path(path), lines.encode("ascii"))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_manifest(path) -> tuple[dict[str, str], dict[str, str]]:
    """Parse `# key = value` header lines and `sha256 relpath` entries."""
    path = Path(path)
    try:
        text = path.read_text("ascii")
    except OSError as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from exc
    header: dict[str, str] = {}
    entries: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 2 or len(parts[0]) != 64:
            raise FormatError(f"{path}:{ln}: expected `sha256 path`")
        entries[parts[1]] = parts[0]
    return header, entries


def verify_dataset(data_dir, channels: int, merge: str) -> dict[str, str]:
    """Check the manifest matches the config and every listed file hashes.

    Returns the manifest header.
    """
    data_dir = Path(data_dir)
    manifest = data_dir / "manifest.txt"
    if not manifest.is_file():
        raise DatasetError(f"{data_dir}: no manifest.txt")
    header, entries = read_manifest(manifest)
    if "channels" not in header:
        raise DatasetError(f"{manifest}: manifest records no channel count")
    if int(header["channels"]) != channels:
        raise DatasetError(
            f"dataset has channels = {header['channels']}, config wants {channels}"
        )
    if header.get("merge", "") != merge:
        raise DatasetError(
            f"dataset has merge = {header.get('merge', '<missing>')}, "
            f"config wants {merge}"
        )
    for rel, digest in entries.items():
        target = data_dir / rel
        if not target.is_file():
            raise DatasetError(f"{manifest}: missing file {rel}")
        if file_sha256(target) != digest:
            raise DatasetError(f"{manifest}: checksum mismatch for {rel}")
    return header


def discover_bev_frames(data_dir, channels: int) -> list[tuple[str, list[Path]]]:
    """Find BEV frames, each as (frame id, [t0, t1, t2...] image paths)."""
    bev_dir = Path(data_dir) / "bev"
    if not bev_dir.is_dir():
        raise DatasetError(f"{data_dir}: no bev directory")
    frames = []
    for png in sorted(bev_dir.glob("*.png")):
        if "_t" in png.stem:
            continue
        paths = [png]
        for k in range(1, channels):
            hist = png.with_name(f"{png.stem}_t{k}.png")
            if not hist.is_file():
                raise DatasetError(f"missing history image {hist.name}")
            paths.append(hist)
        frames.append((png.stem, paths))
    if not frames:
        raise DatasetError(f"{bev_dir}: no BEV images")
    return frames


@dataclass
class Sample:
    frame_id: str
    image: np.ndarray  # (C, H, W) float32 in [0, 1]
    target: np.ndarray | None  # (H, W) int64 class indices, IGNORE for Void
    sidecar: dict[str, str]


def load_samples(data_dir, channels: int, merge: str, with_labels=True) -> list[Sample]:
    """Load every frame into memory; all frames must share one geometry."""
    data_dir = Path(data_dir)
    lut = np.full(4, IGNORE, np.int64)
    for src, dst in TARGET_MAPS[merge].items():
        lut[src] = dst
    samples = []
    shape = None
    for frame_id, paths in discover_bev_frames(data_dir, channels):
        planes = []
        sidecar = None
        for p in paths:
            arr, sc = read_bev(p)
            if sidecar is None:
                sidecar = sc
            planes.append(arr.astype(np.float32) / 65535.0)
        image = np.stack(planes)
        if shape is None:
            shape = image.shape
        elif image.shape != shape:
            raise ShapeError(
                f"{frame_id}: image shape {image.shape[1:]} differs from {shape[1:]}"
            )
        target = None
        if with_labels:
            label_path = data_dir / "labels" / f"{frame_id}_label.png"
            if not label_path.is_file():
                raise DatasetError(f"missing label image {label_path.name}")
            labels = read_label_image(label_path)
            if labels.shape != image.shape[1:]:
                raise ShapeError(
                    f"{frame_id}: labels {labels.shape} vs image {image.shape[1:]}"
                )
            target = lut[labels]
        samples.append(Sample(frame_id, image, target, sidecar))
    return samples
