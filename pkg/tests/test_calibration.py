"""Extrinsic estimation and reflector detection."""

import math

import numpy as np
import pytest

from ross.calibration import (
    CalibrationResult,
    TargetCorrespondence,
    detect_reflectors,
    estimate_extrinsics,
)
from ross.errors import ConfigError, DegenerateGeometryError, InsufficientDataError
from ross.formats import RadarFrame
from ross.geometry import RigidTransform


def _pairs_from_transform(extrinsic, lidar_pts):
    radar = extrinsic.apply(np.asarray(lidar_pts, dtype=np.float64))[:, :2]
    return [
        TargetCorrespondence(tuple(l), (float(r[0]), float(r[1])))
        for l, r in zip(lidar_pts, radar)
    ]


_SPREAD = [
    (3.0, 1.0, 0.1),
    (-2.0, 4.0, -0.2),
    (5.0, -3.0, 0.3),
    (-4.0, -2.0, 0.0),
    (1.0, 6.0, 0.15),
]


class TestEstimate:
    def test_noiseless_recovery(self):
        truth = RigidTransform.from_yaw_pitch_roll(0.7, 0.0, 0.0, (0.5, -0.25, 0.0))
        result = estimate_extrinsics(_pairs_from_transform(truth, _SPREAD))
        got = result.extrinsic
        assert np.allclose(got.translation[:2], truth.translation[:2], atol=1e-9)
        assert got.yaw() == pytest.approx(0.7, abs=1e-9)
        assert result.rms_residual < 1e-9

    def test_fixed_z_passthrough(self):
        truth = RigidTransform.from_yaw_pitch_roll(0.2, 0.0, 0.0, (1.0, 2.0, 0.0))
        result = estimate_extrinsics(_pairs_from_transform(truth, _SPREAD), fixed_z=0.4)
        assert result.extrinsic.translation[2] == 0.4

    def test_known_tilt_recovery(self):
        roll, pitch = 0.05, -0.03
        truth = RigidTransform.from_yaw_pitch_roll(0.4, pitch, roll, (0.3, 0.6, 0.0))
        pairs = _pairs_from_transform(truth, _SPREAD)
        result = estimate_extrinsics(pairs, fixed_roll_pitch=(roll, pitch))
        assert result.rms_residual < 1e-9
        assert np.allclose(result.extrinsic.translation[:2], (0.3, 0.6), atol=1e-8)

    def test_permutation_invariant_bit_exact(self):
        truth = RigidTransform.from_yaw_pitch_roll(0.3, 0.0, 0.0, (0.1, 0.2, 0.0))
        pairs = _pairs_from_transform(truth, _SPREAD)
        base = estimate_extrinsics(pairs)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            shuffled = [pairs[i] for i in rng.permutation(len(pairs))]
            other = estimate_extrinsics(shuffled)
            assert np.array_equal(other.extrinsic.quaternion, base.extrinsic.quaternion)
            assert np.array_equal(other.extrinsic.translation, base.extrinsic.translation)
            assert other.rms_residual == base.rms_residual
            assert other.per_target_residuals == base.per_target_residuals

    def test_too_few_targets(self):
        truth = RigidTransform.from_yaw_pitch_roll(0.1, 0.0, 0.0)
        pairs = _pairs_from_transform(truth, _SPREAD[:2])
        with pytest.raises(InsufficientDataError, match="3"):
            estimate_extrinsics(pairs)

    def test_collinear_targets(self):
        pts = [(float(i), 2.0 * i + 1.0, 0.0) for i in range(5)]
        pairs = _pairs_from_transform(RigidTransform.from_yaw_pitch_roll(0.0, 0.0, 0.0), pts)
        with pytest.raises(DegenerateGeometryError, match="collinear"):
            estimate_extrinsics(pairs)

    def test_rms_on_symmetric_perturbation(self):
        """Opposite radial pushes leave the identity optimal; rms is known."""
        pairs = [
            TargetCorrespondence((1.0, 0.0, 0.0), (1.4, 0.0)),
            TargetCorrespondence((-1.0, 0.0, 0.0), (-1.4, 0.0)),
            TargetCorrespondence((0.0, 1.0, 0.0), (0.0, 1.0)),
            TargetCorrespondence((0.0, -1.0, 0.0), (0.0, -1.0)),
        ]
        result = estimate_extrinsics(pairs)
        assert np.allclose(result.extrinsic.translation[:2], (0.0, 0.0), atol=1e-12)
        assert result.rms_residual == pytest.approx(math.sqrt(0.08), rel=1e-12)
        assert sorted(result.per_target_residuals) == pytest.approx(
            [0.0, 0.0, 0.4, 0.4], abs=1e-12
        )

    def test_residuals_consistent_with_extrinsic(self):
        rng = np.random.default_rng(7)
        lidar = rng.uniform(-5, 5, (6, 3))
        radar = rng.uniform(-5, 5, (6, 2))
        pairs = [
            TargetCorrespondence(tuple(l), tuple(r)) for l, r in zip(lidar, radar)
        ]
        result = estimate_extrinsics(pairs)
        planar = result.extrinsic.apply(lidar)[:, :2]
        want = np.sqrt(np.sum((planar - radar) ** 2, axis=1))
        assert np.allclose(sorted(result.per_target_residuals), sorted(want), atol=1e-12)
        assert result.rms_residual == pytest.approx(
            math.sqrt(np.mean(want**2)), rel=1e-12
        )

    def test_result_type(self):
        truth = RigidTransform.from_yaw_pitch_roll(0.0, 0.0, 0.0)
        result = estimate_extrinsics(_pairs_from_transform(truth, _SPREAD))
        assert isinstance(result, CalibrationResult)


def _frame(energy, res=0.5, az0=0.0):
    return RadarFrame(
        energy=np.asarray(energy, dtype=np.uint16),
        range_resolution=res,
        azimuth_0_direction=az0,
        timestamp=0.0,
    )


class TestDetectReflectors:
    def test_single_peak_position(self):
        e = np.zeros((8, 16), np.uint16)
        e[0, 10] = 30000
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=1.0)
        assert pts == [(5.0, 0.0)]

    def test_peak_off_axis(self):
        e = np.zeros((4, 16), np.uint16)
        e[1, 8] = 30000  # azimuth pi/2, range 4.0
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=1.0)
        assert len(pts) == 1
        x, y = pts[0]
        assert x == pytest.approx(0.0, abs=1e-12)
        assert y == pytest.approx(4.0, abs=1e-12)

    def test_below_threshold_ignored(self):
        e = np.zeros((8, 16), np.uint16)
        e[2, 5] = 19999
        assert detect_reflectors(_frame(e), min_intensity=20000, min_separation=1.0) == []

    def test_exactly_at_threshold_ignored(self):
        e = np.zeros((8, 16), np.uint16)
        e[2, 5] = 20000
        assert detect_reflectors(_frame(e), min_intensity=20000, min_separation=1.0) == []

    def test_larger_neighbor_suppresses(self):
        e = np.zeros((8, 16), np.uint16)
        e[3, 5] = 25000
        e[3, 6] = 26000
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=0.1)
        assert len(pts) == 1
        x, y = pts[0]
        assert math.hypot(x, y) == pytest.approx(3.0, abs=1e-12)

    def test_azimuth_neighbors_wrap(self):
        e = np.zeros((8, 16), np.uint16)
        e[0, 5] = 25000
        e[7, 5] = 26000  # wraps to be a neighbor of row 0
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=0.1)
        assert len(pts) == 1

    def test_range_does_not_wrap(self):
        e = np.zeros((8, 16), np.uint16)
        e[3, 0] = 25000
        e[3, 15] = 60000
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=0.1)
        assert len(pts) == 2

    def test_strongest_first(self):
        e = np.zeros((8, 32), np.uint16)
        e[0, 10] = 25000  # (5, 0)
        e[4, 10] = 30000  # (-5, 0)
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=1.0)
        assert len(pts) == 2
        assert pts[0][0] == pytest.approx(-5.0, abs=1e-9)
        assert pts[1][0] == pytest.approx(5.0)

    def test_close_pair_keeps_stronger(self):
        e = np.zeros((16, 32), np.uint16)
        e[0, 10] = 25000
        e[0, 12] = 30000
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=2.0)
        assert len(pts) == 1
        assert pts[0][0] == pytest.approx(6.0)

    def test_separation_boundary_inclusive(self):
        e = np.zeros((16, 32), np.uint16)
        e[0, 10] = 30000  # (5, 0)
        e[0, 14] = 25000  # (7, 0), exactly 2.0 m away
        pts = detect_reflectors(_frame(e), min_intensity=20000, min_separation=2.0)
        assert len(pts) == 1

    def test_bad_separation(self):
        e = np.zeros((4, 4), np.uint16)
        with pytest.raises(ConfigError):
            detect_reflectors(_frame(e), min_intensity=10, min_separation=0.0)

    def test_empty_frame(self):
        e = np.zeros((8, 16), np.uint16)
        assert detect_reflectors(_frame(e), min_intensity=100, min_separation=1.0) == []
