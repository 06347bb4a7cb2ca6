"""SE(3) transforms, pose interpolation, and voxel indexing primitives.

Conventions: quaternions are (w, x, y, z) and kept unit-norm; a transform
maps points from its source frame into its target frame via R @ p + t.
Poses in a trajectory map sensor coordinates into the world frame.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TrajectoryRangeError

__all__ = [
    "RigidTransform",
    "StampedPose",
    "apply_transform",
    "compose",
    "interpolate_pose",
    "slerp",
    "voxel_index",
    "voxel_indices",
]


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True)
class RigidTransform:
    """Rigid SE(3) transform: unit quaternion (w, x, y, z) plus translation in meters."""

    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4).copy()
        t = np.asarray(self.translation, dtype=np.float64).reshape(3).copy()
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise ConfigError("quaternion norm is zero; rotation undefined")
        q /= norm
        if q[0] < 0.0:  # canonical sign, so equal rotations compare equal
            q = -q
        q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "quaternion", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_yaw_pitch_roll(
        cls,
        yaw: float,
        pitch: float = 0.0,
        roll: float = 0.0,
        translation=(0.0, 0.0, 0.0),
    ) -> "RigidTransform":
        """Rotation Rz(yaw) @ Ry(pitch) @ Rx(roll) with the given translation."""
        cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
        cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
        cr, sr = math.cos(roll / 2), math.sin(roll / 2)
        qz = np.array([cy, 0.0, 0.0, sy])
        qy = np.array([cp, 0.0, sp, 0.0])
        qx = np.array([cr, sr, 0.0, 0.0])
        return cls(_quat_multiply(_quat_multiply(qz, qy), qx), np.asarray(translation, dtype=np.float64))

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        axis = np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        half = angle / 2.0
        q = np.concatenate([[math.cos(half)], math.sin(half) * axis])
        return cls(q, np.asarray(translation, dtype=np.float64))

    def rotation_matrix(self) -> np.ndarray:
        return _quat_to_matrix(self.quaternion)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (3,) or a stack of points (N, 3)."""
        p = np.asarray(points, dtype=np.float64)
        r = self.rotation_matrix()
        if p.ndim == 1:
            return r @ p + self.translation
        return p @ r.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self applied after other: (self @ other)(p) == self(other(p))."""
        q = _quat_multiply(self.quaternion, other.quaternion)
        t = self.rotation_matrix() @ other.translation + self.translation
        return RigidTransform(q, t)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        conj = self.quaternion * np.array([1.0, -1.0, -1.0, -1.0])
        rinv = _quat_to_matrix(conj)
        return RigidTransform(conj, -(rinv @ self.translation))

    def yaw(self) -> float:
        """Rotation angle about +z of the x axis image (heading)."""
        r = self.rotation_matrix()
        return math.atan2(r[1, 0], r[0, 0])


@dataclass(frozen=True)
class StampedPose:
    """A sensor-to-world pose at a point in time (seconds)."""

    timestamp: float
    pose: RigidTransform


def apply_transform(transform: RigidTransform, point: np.ndarray) -> np.ndarray:
    return transform.apply(point)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def slerp(qa: np.ndarray, qb: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions, u in [0, 1]."""
    qa = np.asarray(qa, dtype=np.float64)
    qb = np.asarray(qb, dtype=np.float64)
    dot = float(qa @ qb)
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 1.0 - 1e-12:
        q = qa + u * (qb - qa)
        return q / np.linalg.norm(q)
    theta = math.acos(min(dot, 1.0))
    s = math.sin(theta)
    q = (math.sin((1.0 - u) * theta) / s) * qa + (math.sin(u * theta) / s) * qb
    return q / np.linalg.norm(q)


def validate_trajectory(trajectory: list[StampedPose]) -> None:
    if not trajectory:
        raise ConfigError("trajectory is empty")
    for prev, cur in zip(trajectory, trajectory[1:]):
        if cur.timestamp <= prev.timestamp:
            raise ConfigError(
                f"trajectory timestamps must be strictly increasing; "
                f"{cur.timestamp} follows {prev.timestamp}"
            )


def interpolate_pose(trajectory: list[StampedPose], t: float) -> RigidTransform:
    """Pose at time t: linear in translation, slerp in rotation between brackets.

    Exact samples are returned as-is. Raises TrajectoryRangeError outside
    [first, last].
    """
    if not trajectory:
        raise ConfigError("cannot interpolate an empty trajectory")
    times = [s.timestamp for s in trajectory]
    if t < times[0] or t > times[-1]:
        raise TrajectoryRangeError(
            f"t={t} outside trajectory range [{times[0]}, {times[-1]}]"
        )
    i = bisect_left(times, t)
    if i < len(times) and times[i] == t:
        return trajectory[i].pose
    lo, hi = trajectory[i - 1], trajectory[i]
    u = (t - lo.timestamp) / (hi.timestamp - lo.timestamp)
    q = slerp(lo.pose.quaternion, hi.pose.quaternion, u)
    trans = (1.0 - u) * lo.pose.translation + u * hi.pose.translation
    return RigidTransform(q, trans)


def voxel_index(point, origin, voxel_size: float) -> tuple[int, int, int]:
    """Grid cell of a point: floor((p - origin) / voxel_size) per component.

    A point exactly on a cell boundary belongs to the higher cell.
    """
    if voxel_size <= 0:
        raise ConfigError(f"voxel_size must be positive, got {voxel_size}")
    p = np.asarray(point, dtype=np.float64)
    o = np.asarray(origin, dtype=np.float64)
    idx = np.floor((p - o) / voxel_size).astype(np.int64)
    return int(idx[0]), int(idx[1]), int(idx[2])


def voxel_indices(points: np.ndarray, origin, voxel_size: float) -> np.ndarray:
    """Vectorized voxel_index over an (N, 3) array; returns (N, 3) int64."""
    if voxel_size <= 0:
        raise ConfigError(f"voxel_size must be positive, got {voxel_size}")
    p = np.asarray(points, dtype=np.float64)
    o = np.asarray(origin, dtype=np.float64)
    return np.floor((p - o) / voxel_size).astype(np.int64)
