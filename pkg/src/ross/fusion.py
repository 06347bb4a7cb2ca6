"""Scan accumulation into the world frame and majority-vote voxel labeling.

The vote runs over the four merged classes. Void points are counted but can
never win a cell: they mark unlabeled returns, and letting them dominate
would erase real labels. Ties between non-Void classes go to the lowest
class id, so results are deterministic and iteration-order free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, TrajectoryRangeError
from .geometry import interpolate_pose, voxel_indices
from .taxonomy import ClassTable, remap_labels

__all__ = ["VoxelLabelMap", "accumulate", "build_voxel_map", "fuse_cell", "merge_maps"]


def _fuse_counts(counts: np.ndarray) -> np.ndarray:
    """Vectorized majority vote over (M, 4) count rows -> (M,) uint8 labels."""
    nonvoid = counts[:, 1:4]
    best = np.argmax(nonvoid, axis=1).astype(np.uint8) + 1
    best[nonvoid.max(axis=1) == 0] = 0
    return best


@dataclass
class VoxelLabelMap:
    """Sparse voxel grid: per-cell class counts and the fused labels."""

    voxel_size: float
    origin: np.ndarray
    indices: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.voxel_size <= 0:
            raise ConfigError(f"voxel_size must be positive, got {self.voxel_size}")
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, 3)
        self.counts = np.asarray(self.counts, dtype=np.uint64).reshape(-1, 4)
        if len(self.indices) != len(self.counts):
            raise ConfigError(
                f"{len(self.indices)} cells but {len(self.counts)} count rows"
            )

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def fused_labels(self) -> np.ndarray:
        return _fuse_counts(self.counts)

    def centers(self) -> np.ndarray:
        """World coordinates of all cell centers, (M, 3) float64."""
        return self.origin + (self.indices + 0.5) * self.voxel_size

    def lookup(self, index) -> int | None:
        """Fused label of one (i, j, k) cell, or None if empty."""
        hit = np.all(self.indices == np.asarray(index, dtype=np.int64), axis=1)
        pos = np.nonzero(hit)[0]
        if len(pos) == 0:
            return None
        return int(self.fused_labels[pos[0]])


def fuse_cell(counts) -> int:
    """Majority label for one cell's (Void, Ground, Bushes, Obstacles) counts."""
    counts = np.asarray(counts, dtype=np.uint64).reshape(4)
    if counts.sum() == 0:
        raise DataError("cannot fuse an empty cell (all counts zero)")
    return int(_fuse_counts(counts[None, :])[0])


def accumulate(scans, traj) -> "object":
    """Transform each scan by its interpolated pose and concatenate.

    Returns a LabeledCloud in the world frame with float64 coordinates;
    intensity is carried through unchanged, as are labels.
    """
    from .formats import LabeledCloud

    if not scans:
        raise DataError("no scans to accumulate")
    parts = []
    labels = []
    for k, scan in enumerate(scans):
        try:
            pose = interpolate_pose(traj, scan.timestamp)
        except TrajectoryRangeError as exc:
            raise TrajectoryRangeError(f"scan {k} (t={scan.timestamp}): {exc}") from None
        pts = np.empty((len(scan), 4), dtype=np.float64)
        pts[:, :3] = pose.apply(scan.points[:, :3].astype(np.float64))
        pts[:, 3] = scan.points[:, 3]
        parts.append(pts)
        labels.append(scan.labels)
    return LabeledCloud(
        points=np.concatenate(parts, axis=0),
        labels=np.concatenate(labels),
        timestamp=float(scans[-1].timestamp),
    )


def build_voxel_map(
    cloud,
    class_table: ClassTable | None = None,
    voxel_size: float = 0.25,
    origin=(0.0, 0.0, 0.0),
    min_points: int = 0,
) -> VoxelLabelMap:
    """Voxelize a world-frame cloud and count merged labels per cell."""
    if voxel_size <= 0:
        raise ConfigError(f"voxel_size must be positive, got {voxel_size}")
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    merged = remap_labels(cloud.labels, class_table).astype(np.int64)
    if len(cloud) == 0:
        return VoxelLabelMap(
            voxel_size=voxel_size,
            origin=origin,
            indices=np.zeros((0, 3), np.int64),
            counts=np.zeros((0, 4), np.uint64),
        )
    idx = voxel_indices(cloud.points[:, :3], origin, voxel_size)
    cells, inverse = np.unique(idx, axis=0, return_inverse=True)
    counts = np.bincount(
        inverse.astype(np.int64) * 4 + merged, minlength=len(cells) * 4
    ).reshape(-1, 4).astype(np.uint64)
    if min_points > 0:
        keep = counts.sum(axis=1) >= np.uint64(min_points)
        cells = cells[keep]
        counts = counts[keep]
    return VoxelLabelMap(voxel_size=voxel_size, origin=origin, indices=cells, counts=counts)


def merge_maps(a: VoxelLabelMap, b: VoxelLabelMap) -> VoxelLabelMap:
    """Add two partial maps; commutative and associative over counts."""
    if a.voxel_size != b.voxel_size or not np.array_equal(a.origin, b.origin):
        raise ConfigError("cannot merge maps with different grids")
    stacked = np.concatenate([a.indices, b.indices], axis=0)
    counts = np.concatenate([a.counts, b.counts], axis=0)
    cells, inverse = np.unique(stacked, axis=0, return_inverse=True)
    summed = np.zeros((len(cells), 4), dtype=np.uint64)
    np.add.at(summed, inverse, counts)
    return VoxelLabelMap(voxel_size=a.voxel_size, origin=a.origin, indices=cells, counts=summed)
