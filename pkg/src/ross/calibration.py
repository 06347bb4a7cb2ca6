"""LIDAR-to-radar extrinsic estimation from reflector correspondences.

The radar only measures targets on its xy plane, so z, roll, and pitch are
unobservable and must be supplied as mounting values; the solver fits the
remaining (x, y, yaw) by least squares. A closed-form 2D Procrustes fit
seeds a Gauss-Newton refinement (at most 50 steps, convergence when the
step norm drops below 1e-10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateGeometryError, InsufficientDataError
from .geometry import RigidTransform

__all__ = [
    "TargetCorrespondence",
    "CalibrationResult",
    "estimate_extrinsics",
    "detect_reflectors",
]

_MAX_ITERS = 50
_STEP_TOL = 1e-10
_COND_TOL = 1e-9


@dataclass(frozen=True)
class TargetCorrespondence:
    """One reflector seen by both sensors: 3D in LIDAR, 2D on the radar plane."""

    lidar_point: tuple[float, float, float]
    radar_point: tuple[float, float]


@dataclass(frozen=True)
class CalibrationResult:
    extrinsic: RigidTransform
    rms_residual: float
    per_target_residuals: tuple[float, ...]


def estimate_extrinsics(
    pairs,
    fixed_z: float = 0.0,
    fixed_roll_pitch: tuple[float, float] = (0.0, 0.0),
) -> CalibrationResult:
    """Fit the LIDAR->radar transform minimizing planar reflector residuals.

    Correspondences are sorted internally, so the result is exactly
    permutation-invariant.
    """
    if len(pairs) < 3:
        raise InsufficientDataError(
            f"need at least 3 correspondences, got {len(pairs)}"
        )
    lidar = np.array([p.lidar_point for p in pairs], dtype=np.float64)
    radar = np.array([p.radar_point for p in pairs], dtype=np.float64)
    order = np.lexsort((radar[:, 1], radar[:, 0], lidar[:, 2], lidar[:, 1], lidar[:, 0]))
    lidar = lidar[order]
    radar = radar[order]

    roll, pitch = fixed_roll_pitch
    tilt = RigidTransform.from_yaw_pitch_roll(0.0, pitch, roll)
    src3 = tilt.apply(lidar)
    src = src3[:, :2]
    dst = radar

    centered = src - src.mean(axis=0)
    cov = centered.T @ centered / len(src)
    eig = np.linalg.eigvalsh(cov)
    if eig[0] <= _COND_TOL * max(eig[1], 1e-12):
        raise DegenerateGeometryError(
            "reflector targets are collinear in the lidar xy projection"
        )

    # closed-form 2D Procrustes seed
    dst_c = dst - dst.mean(axis=0)
    num = float(np.sum(centered[:, 0] * dst_c[:, 1] - centered[:, 1] * dst_c[:, 0]))
    den = float(np.sum(centered[:, 0] * dst_c[:, 0] + centered[:, 1] * dst_c[:, 1]))
    yaw = math.atan2(num, den)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rot = np.array([[cy, -sy], [sy, cy]])
    t = dst.mean(axis=0) - rot @ src.mean(axis=0)

    for _ in range(_MAX_ITERS):
        cy, sy = math.cos(yaw), math.sin(yaw)
        rot = np.array([[cy, -sy], [sy, cy]])
        drot = np.array([[-sy, -cy], [cy, -sy]])
        pred = src @ rot.T + t
        res = (dst - pred).reshape(-1)
        jac = np.zeros((2 * len(src), 3))
        jac[0::2, 0] = 1.0
        jac[1::2, 1] = 1.0
        jth = src @ drot.T
        jac[0::2, 2] = jth[:, 0]
        jac[1::2, 2] = jth[:, 1]
        jtj = jac.T @ jac
        jtr = jac.T @ res
        try:
            step = np.linalg.solve(jtj, jtr)
        except np.linalg.LinAlgError as exc:
            raise DegenerateGeometryError(f"normal equations singular: {exc}") from exc
        t = t + step[:2]
        yaw = yaw + step[2]
        if float(np.linalg.norm(step)) < _STEP_TOL:
            break

    extrinsic = RigidTransform.from_yaw_pitch_roll(
        yaw, pitch, roll, translation=(t[0], t[1], fixed_z)
    )
    planar = extrinsic.apply(lidar)[:, :2]
    residuals = np.linalg.norm(planar - radar, axis=1)
    rms = float(np.sqrt(np.mean(residuals**2)))
    return CalibrationResult(
        extrinsic=extrinsic,
        rms_residual=rms,
        per_target_residuals=tuple(float(r) for r in residuals),
    )


def detect_reflectors(frame, min_intensity: int, min_separation: float) -> list[tuple[float, float]]:
    """Strong local maxima of a polar scan as xy points, strongest first.

    A cell qualifies when it exceeds min_intensity and none of its 8
    neighbors (azimuth wraps around; range does not) is larger. Maxima
    within min_separation meters of an already-accepted stronger one are
    suppressed.
    """
    if min_separation <= 0:
        raise ConfigError(f"min_separation must be positive, got {min_separation}")
    e = frame.energy.astype(np.int64)
    na, nb = e.shape
    is_max = e > int(min_intensity)
    for da in (-1, 0, 1):
        rolled = np.roll(e, da, axis=0)
        for db in (-1, 0, 1):
            if da == 0 and db == 0:
                continue
            shifted = np.full_like(rolled, -1)
            if db == 0:
                shifted = rolled
            elif db == 1:
                shifted[:, 1:] = rolled[:, :-1]
            else:
                shifted[:, :-1] = rolled[:, 1:]
            is_max &= e >= shifted
    cand_a, cand_b = np.nonzero(is_max)
    if len(cand_a) == 0:
        return []
    values = e[cand_a, cand_b]
    order = np.lexsort((cand_b, cand_a, -values))
    accepted: list[tuple[float, float]] = []
    step = frame.azimuth_step
    for k in order:
        rng = float(cand_b[k]) * frame.range_resolution
        theta = frame.azimuth_0_direction + float(cand_a[k]) * step
        x = rng * math.cos(theta)
        y = rng * math.sin(theta)
        if any((x - ax) ** 2 + (y - ay) ** 2 <= min_separation**2 for ax, ay in accepted):
            continue
        accepted.append((x, y))
    return accepted
