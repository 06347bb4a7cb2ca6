"""Polar-to-BEV rendering, label-image rendering, and frame stacking.

Pixel convention for all rasters: pixel (r, c) covers the point
x = (c - center_col) * mpp, y = (center_row - r) * mpp in the radar frame
(x right, y up). A point maps to the pixel whose center is nearest, with
exact halves rounding toward the higher index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InsufficientHistoryError
from .formats import BevImage, LabelImage, RadarFrame
from .geometry import RigidTransform, interpolate_pose

__all__ = [
    "StackedInput",
    "polar_to_bev",
    "render_label_image",
    "stack_frames",
    "normalize_intensity",
]


@dataclass
class StackedInput:
    """Model input: 1 or 3 geometry-aligned BEV channels, current frame first."""

    channels: list
    frame_timestamps: list


def _center(size) -> tuple[float, float]:
    h, w = size
    return (h // 2, w // 2)


def polar_to_bev(frame: RadarFrame, mpp: float, size=(512, 512)) -> BevImage:
    """Rasterize a polar scan to a Cartesian BEV image by nearest-bin lookup.

    Pixels beyond n_range_bins * range_resolution are 0; the pixel exactly at
    the origin takes the value of azimuth row 0, range bin 0.
    """
    h, w = size
    if mpp <= 0:
        raise ConfigError(f"mpp must be positive, got {mpp}")
    if h < 1 or w < 1:
        raise ConfigError(f"image size must be at least 1x1, got {size}")
    cr, cc = _center(size)
    x = (np.arange(w, dtype=np.float64) - cc) * mpp
    y = (cr - np.arange(h, dtype=np.float64)) * mpp
    xg = np.broadcast_to(x[None, :], (h, w))
    yg = np.broadcast_to(y[:, None], (h, w))
    rr = np.sqrt(xg * xg + yg * yg)
    theta = np.arctan2(yg, xg)
    energy = np.ascontiguousarray(frame.energy, dtype=np.uint16)
    pixels = kernels.polar_sample(
        energy,
        np.ascontiguousarray(theta),
        np.ascontiguousarray(rr),
        frame.azimuth_0_direction,
        frame.azimuth_step,
        frame.range_resolution,
    )
    return BevImage(pixels=pixels, meters_per_pixel=mpp, center_pixel=(cr, cc))


def render_label_image(
    vox_map,
    pose_world: RigidTransform,
    lidar_to_radar: RigidTransform | None = None,
    mpp: float = 0.5,
    size=(512, 512),
    z_band: tuple[float, float] = (-1.0, 3.0),
) -> LabelImage:
    """Project fused voxel labels onto the radar xy plane.

    pose_world is the trajectory sensor's pose; the radar pose is
    pose_world composed with the inverse extrinsic (pass None when
    pose_world already is the radar pose). Voxel centers inside the z band
    (closed interval, radar frame) are splatted to the pixel containing
    their (x, y); overlaps keep the highest class id, which is exactly the
    projection priority order Obstacles > Bushes > Ground > Void.
    """
    h, w = size
    if z_band[0] >= z_band[1]:
        raise ConfigError(f"z band must satisfy z_min < z_max, got {z_band}")
    if mpp <= 0:
        raise ConfigError(f"mpp must be positive, got {mpp}")
    if h < 1 or w < 1:
        raise ConfigError(f"image size must be at least 1x1, got {size}")
    cr, cc = _center(size)
    img = np.zeros((h, w), dtype=np.uint8)
    radar_pose = pose_world if lidar_to_radar is None else pose_world @ lidar_to_radar.inverse()
    world_to_radar = radar_pose.inverse()
    if len(vox_map):
        pts = world_to_radar.apply(vox_map.centers())
        inband = (pts[:, 2] >= z_band[0]) & (pts[:, 2] <= z_band[1])
        pts = pts[inband]
        labels = vox_map.fused_labels[inband]
        cols = (cc + np.floor(pts[:, 0] / mpp + 0.5)).astype(np.int64)
        rows = (cr - np.floor(pts[:, 1] / mpp + 0.5)).astype(np.int64)
        ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w) & (labels > 0)
        kernels.splat_priority(
            img,
            np.ascontiguousarray(rows[ok]),
            np.ascontiguousarray(cols[ok]),
            np.ascontiguousarray(labels[ok]),
        )
    return LabelImage(classes=img, meters_per_pixel=mpp, center_pixel=(cr, cc))


def _planar_matrix(t: RigidTransform) -> np.ndarray:
    """2x3 action of t on (x, y, 0): rows are the x and y outputs."""
    r = t.rotation_matrix()
    return np.array(
        [
            [r[0, 0], r[0, 1], t.translation[0]],
            [r[1, 0], r[1, 1], t.translation[1]],
        ]
    )


def stack_frames(
    frames,
    traj,
    n: int = 1,
    mpp: float = 0.5,
    size=(512, 512),
    extrinsic: RigidTransform | None = None,
) -> StackedInput:
    """Build the 1- or 3-channel input for the latest frame in `frames`.

    Channel 0 is the latest frame's BEV; channels 1..n-1 are earlier frames
    warped into the latest radar frame through the trajectory. When the
    trajectory tracks the LIDAR, pass the lidar-to-radar extrinsic so poses
    are converted to radar poses; with extrinsic=None poses are used as-is.
    """
    if n not in (1, 3):
        raise ConfigError(f"channels must be 1 or 3, got {n}")
    if n > len(frames):
        raise InsufficientHistoryError(
            f"need {n} frames, only {len(frames)} available"
        )
    times = [f.timestamp for f in frames]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ConfigError("frames must be strictly time-ordered")

    def radar_pose(t: float) -> RigidTransform:
        pose = interpolate_pose(traj, t)
        return pose if extrinsic is None else pose @ extrinsic.inverse()

    current = frames[-1]
    chan0 = polar_to_bev(current, mpp, size)
    channels = [chan0]
    stamps = [current.timestamp]
    cr, cc = chan0.center_pixel
    if n > 1:
        pose0 = radar_pose(current.timestamp)
        for k in range(1, n):
            earlier = frames[-1 - k]
            bev = polar_to_bev(earlier, mpp, size)
            rel = radar_pose(earlier.timestamp).inverse() @ pose0
            warped = kernels.warp_nn(
                np.ascontiguousarray(bev.pixels, dtype=np.uint16),
                np.ascontiguousarray(_planar_matrix(rel)),
                float(cc),
                float(cr),
                mpp,
            )
            channels.append(BevImage(pixels=warped, meters_per_pixel=mpp, center_pixel=(cr, cc)))
            stamps.append(earlier.timestamp)
    return StackedInput(channels=channels, frame_timestamps=stamps)


def normalize_intensity(img: BevImage) -> BevImage:
    """Map uint16 energies to float32 in [0, 1] by dividing by 65535."""
    pixels = (img.pixels.astype(np.float64) / 65535.0).astype(np.float32)
    return BevImage(
        pixels=pixels,
        meters_per_pixel=img.meters_per_pixel,
        center_pixel=img.center_pixel,
    )
