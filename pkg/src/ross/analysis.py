"""Per-class intensity statistics and the classical baselines.

Histograms use integer bin edges: edge_i = floor(i * 65535 / n_bins + 0.5),
so bin i holds values in [edge_i, edge_{i+1}) and the last bin also includes
65535. A value's bin is therefore exactly determined by uint16 arithmetic,
which keeps threshold search reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .taxonomy import VOID

__all__ = [
    "ClassHistogram",
    "histogram_edges",
    "intensity_histogram",
    "threshold_classify",
    "best_threshold",
    "ca_cfar",
    "cfar_frame",
]


@dataclass
class ClassHistogram:
    """Intensity counts for pixels of one class set (Void never counted)."""

    class_set: frozenset
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        self.class_set = frozenset(int(c) for c in self.class_set)
        self.bin_edges = np.asarray(self.bin_edges, dtype=np.uint16)
        self.counts = np.asarray(self.counts, dtype=np.uint64)
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ConfigError(
                f"{len(self.bin_edges)} edges do not bound {len(self.counts)} bins"
            )

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram_edges(n_bins: int) -> np.ndarray:
    """Integer edges of n_bins near-uniform bins over [0, 65535]."""
    if not 1 <= n_bins <= 65535:
        raise ConfigError(f"n_bins must be in 1..65535, got {n_bins}")
    i = np.arange(n_bins + 1, dtype=np.float64)
    return np.floor(i * 65535.0 / n_bins + 0.5).astype(np.uint16)


def bin_values(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin index per value: largest i with edges[i] <= v, capped at the last bin."""
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.minimum(idx, len(edges) - 2)


def _check_geometry(a, b) -> None:
    pa = a.pixels if hasattr(a, "pixels") else a.classes
    pb = b.pixels if hasattr(b, "pixels") else b.classes
    if pa.shape != pb.shape:
        raise DataError(f"geometry mismatch: {pa.shape} vs {pb.shape}")
    if a.meters_per_pixel != b.meters_per_pixel or tuple(a.center_pixel) != tuple(b.center_pixel):
        raise DataError("geometry mismatch: images differ in scale or center")


def intensity_histogram(bev, labels, class_set, n_bins: int = 256) -> ClassHistogram:
    """Histogram the BEV energies of pixels whose label is in class_set."""
    _check_geometry(bev, labels)
    edges = histogram_edges(n_bins)
    wanted = frozenset(int(c) for c in class_set)
    mask = (labels.classes != VOID) & np.isin(labels.classes, list(wanted))
    values = bev.pixels[mask]
    counts = np.bincount(bin_values(values, edges), minlength=n_bins).astype(np.uint64)
    return ClassHistogram(class_set=wanted, bin_edges=edges, counts=counts)


def merge_histograms(parts) -> ClassHistogram:
    """Add histograms with identical edges and class sets (commutative)."""
    parts = list(parts)
    if not parts:
        raise DataError("no histograms to merge")
    first = parts[0]
    total = first.counts.copy()
    for other in parts[1:]:
        if not np.array_equal(other.bin_edges, first.bin_edges):
            raise DataError("histogram bin edges differ")
        if other.class_set != first.class_set:
            raise DataError("histogram class sets differ")
        total += other.counts
    return ClassHistogram(class_set=first.class_set, bin_edges=first.bin_edges, counts=total)


def threshold_classify(bev, t: int, low_class: int = 1, high_class: int = 3):
    """Label every pixel by comparing its energy against a global threshold."""
    from .formats import LabelImage

    for c in (low_class, high_class):
        if not 0 <= c <= 3:
            raise ConfigError(f"class id must be 0..3, got {c}")
    if not 0 <= t <= 65535:
        raise ConfigError(f"threshold must be a uint16 value, got {t}")
    classes = np.where(bev.pixels >= np.uint16(t), np.uint8(high_class), np.uint8(low_class))
    return LabelImage(
        classes=classes,
        meters_per_pixel=bev.meters_per_pixel,
        center_pixel=bev.center_pixel,
    )


def best_threshold(hist_a: ClassHistogram, hist_b: ClassHistogram) -> tuple[int, float]:
    """Exhaustively scan bin edges for the best a-below / b-at-or-above split.

    Returns (threshold, balanced accuracy), the lowest threshold on ties.
    Balanced accuracy is the mean of the two class recalls.
    """
    if not np.array_equal(hist_a.bin_edges, hist_b.bin_edges):
        raise DataError("histogram bin edges differ")
    tot_a = hist_a.total
    tot_b = hist_b.total
    if tot_a == 0 or tot_b == 0:
        raise DataError("cannot search a threshold against an empty histogram")
    cum_a = np.concatenate([[0], np.cumsum(hist_a.counts)]).astype(np.float64)
    cum_b = np.concatenate([[0], np.cumsum(hist_b.counts)]).astype(np.float64)
    n = hist_a.n_bins
    k = np.arange(n)
    recall_a = cum_a[k] / tot_a
    recall_b = (tot_b - cum_b[k]) / tot_b
    balanced = (recall_a + recall_b) / 2.0
    best = int(np.argmax(balanced))
    return int(hist_a.bin_edges[best]), float(balanced[best])


def ca_cfar(row, guard: int = 2, train: int = 8, scale: float = 3.0) -> list[int]:
    """Cell-averaging CFAR detections (after suppression) on one range profile."""
    if guard < 0:
        raise ConfigError(f"guard must be >= 0, got {guard}")
    if train < 1:
        raise ConfigError(f"train must be >= 1, got {train}")
    if scale <= 0:
        raise ConfigError(f"scale must be positive, got {scale}")
    row = np.ascontiguousarray(row, dtype=np.uint16)
    if row.ndim != 1:
        raise DataError(f"expected a 1D range profile, got shape {row.shape}")
    need = 2 * (guard + train) + 1
    if len(row) < need:
        raise DataError(
            f"row of {len(row)} cells is shorter than 2*(guard+train)+1 = {need}"
        )
    mask = kernels.cfar_mask(row, guard, train, scale)
    return [int(i) for i in np.nonzero(mask)[0]]


def cfar_frame(frame, guard: int = 2, train: int = 8, scale: float = 3.0) -> list[tuple[int, int]]:
    """Run ca_cfar on every azimuth row; returns (azimuth, range_bin) pairs."""
    out: list[tuple[int, int]] = []
    for a in range(frame.n_azimuth):
        for b in ca_cfar(frame.energy[a], guard, train, scale):
            out.append((a, b))
    return out
