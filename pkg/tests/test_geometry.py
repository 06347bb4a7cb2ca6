"""Transform algebra, pose interpolation, and voxel indexing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ross.errors import ConfigError, TrajectoryRangeError
from ross.geometry import (
    RigidTransform,
    StampedPose,
    interpolate_pose,
    slerp,
    voxel_index,
    voxel_indices,
)


def _rot_zyx(yaw, pitch, roll):
    """Reference rotation built from explicit axis matrices."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def _random_transform(rng):
    q = rng.normal(size=4)
    return RigidTransform(q, rng.uniform(-10, 10, 3))


angles = st.floats(min_value=-3.1, max_value=3.1)
coords = st.floats(min_value=-100.0, max_value=100.0)


class TestRigidTransform:
    def test_quaternion_normalized_and_w_nonnegative(self):
        t = RigidTransform(np.array([-2.0, 1.0, 0.5, -0.25]), np.zeros(3))
        assert t.quaternion[0] >= 0
        assert np.linalg.norm(t.quaternion) == pytest.approx(1.0, abs=1e-15)

    def test_sign_flip_preserves_rotation(self):
        q = np.array([0.5, -0.5, 0.5, 0.5])
        a = RigidTransform(q, np.zeros(3))
        b = RigidTransform(-q, np.zeros(3))
        assert np.allclose(a.rotation_matrix(), b.rotation_matrix(), atol=1e-15)
        assert np.array_equal(a.quaternion, b.quaternion)

    def test_zero_quaternion_rejected(self):
        with pytest.raises(ConfigError):
            RigidTransform(np.zeros(4), np.zeros(3))

    @pytest.mark.parametrize("yaw", [-2.5, -0.7, 0.0, 0.3, 1.2, 3.0])
    @pytest.mark.parametrize("pitch", [-0.9, 0.0, 0.4])
    @pytest.mark.parametrize("roll", [-1.1, 0.0, 0.8])
    def test_from_yaw_pitch_roll_matches_matrix_product(self, yaw, pitch, roll):
        t = RigidTransform.from_yaw_pitch_roll(yaw, pitch, roll)
        assert np.allclose(t.rotation_matrix(), _rot_zyx(yaw, pitch, roll), atol=1e-12)

    def test_yaw_roundtrip(self):
        for yaw in np.linspace(-3.1, 3.1, 13):
            t = RigidTransform.from_yaw_pitch_roll(yaw, 0.0, 0.0)
            assert t.yaw() == pytest.approx(yaw, abs=1e-12)

    def test_apply_rotates_then_translates(self):
        t = RigidTransform.from_yaw_pitch_roll(np.pi / 2, 0.0, 0.0, (1.0, 2.0, 3.0))
        out = t.apply(np.array([1.0, 0.0, 0.0]))
        assert np.allclose(out, [1.0, 3.0, 3.0], atol=1e-12)

    def test_apply_batch_matches_single(self):
        rng = np.random.default_rng(1)
        t = _random_transform(rng)
        pts = rng.uniform(-5, 5, (17, 3))
        batch = t.apply(pts)
        for row, p in zip(batch, pts):
            assert np.allclose(row, t.apply(p), atol=1e-12)

    @given(angles, angles, coords, coords)
    def test_inverse_roundtrip(self, yaw, pitch, x, y):
        t = RigidTransform.from_yaw_pitch_roll(yaw, pitch, 0.3, (x, y, 1.0))
        p = np.array([0.5, -2.0, 4.0])
        assert np.allclose(t.inverse().apply(t.apply(p)), p, atol=1e-9)

    @given(angles, angles, angles)
    def test_compose_matches_sequential_apply(self, a, b, c):
        ta = RigidTransform.from_yaw_pitch_roll(a, 0.0, 0.0, (1.0, 0.0, 0.0))
        tb = RigidTransform.from_yaw_pitch_roll(b, c, 0.0, (0.0, -2.0, 0.5))
        p = np.array([1.0, 2.0, -3.0])
        assert np.allclose((ta @ tb).apply(p), ta.apply(tb.apply(p)), atol=1e-9)

    def test_inverse_composes_to_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            t = _random_transform(rng)
            ident = t @ t.inverse()
            assert np.allclose(ident.rotation_matrix(), np.eye(3), atol=1e-12)
            assert np.allclose(ident.translation, 0.0, atol=1e-9)

    def test_matrix_is_homogeneous_form(self):
        t = RigidTransform.from_yaw_pitch_roll(0.4, 0.1, -0.2, (3.0, -1.0, 2.0))
        m = t.matrix()
        assert m.shape == (4, 4)
        p = np.array([0.7, 0.9, -1.3])
        hom = m @ np.append(p, 1.0)
        assert np.allclose(hom[:3], t.apply(p), atol=1e-12)


class TestSlerp:
    def test_endpoints(self):
        rng = np.random.default_rng(3)
        qa = rng.normal(size=4)
        qa /= np.linalg.norm(qa)
        qb = rng.normal(size=4)
        qb /= np.linalg.norm(qb)
        assert np.allclose(slerp(qa, qb, 0.0), qa, atol=1e-15) or np.allclose(
            slerp(qa, qb, 0.0), -qa, atol=1e-15
        )
        assert np.allclose(slerp(qa, qb, 1.0), qb, atol=1e-12) or np.allclose(
            slerp(qa, qb, 1.0), -qb, atol=1e-12
        )

    def test_halfway_between_identity_and_yaw90_is_yaw45(self):
        qa = RigidTransform.identity().quaternion
        qb = RigidTransform.from_yaw_pitch_roll(np.pi / 2, 0.0, 0.0).quaternion
        mid = RigidTransform(slerp(qa, qb, 0.5), np.zeros(3))
        assert mid.yaw() == pytest.approx(np.pi / 4, abs=1e-12)

    def test_shortest_arc_across_pi(self):
        qa = RigidTransform.from_yaw_pitch_roll(np.deg2rad(170.0), 0.0, 0.0).quaternion
        qb = RigidTransform.from_yaw_pitch_roll(np.deg2rad(-170.0), 0.0, 0.0).quaternion
        mid = RigidTransform(slerp(qa, qb, 0.5), np.zeros(3))
        assert abs(mid.yaw()) == pytest.approx(np.pi, abs=1e-9)

    def test_unit_norm_output(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            qa = rng.normal(size=4)
            qa /= np.linalg.norm(qa)
            qb = rng.normal(size=4)
            qb /= np.linalg.norm(qb)
            q = slerp(qa, qb, rng.random())
            assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)


def _traj():
    return [
        StampedPose(0.0, RigidTransform.from_yaw_pitch_roll(0.0, 0.0, 0.0, (0.0, 0.0, 0.0))),
        StampedPose(1.0, RigidTransform.from_yaw_pitch_roll(np.pi / 2, 0.0, 0.0, (2.0, 0.0, 0.0))),
        StampedPose(3.0, RigidTransform.from_yaw_pitch_roll(np.pi / 2, 0.0, 0.0, (2.0, 4.0, 0.0))),
    ]


class TestInterpolatePose:
    def test_exact_sample_returned_verbatim(self):
        traj = _traj()
        pose = interpolate_pose(traj, 1.0)
        assert np.array_equal(pose.translation, traj[1].pose.translation)
        assert np.array_equal(pose.quaternion, traj[1].pose.quaternion)

    def test_translation_is_linear(self):
        pose = interpolate_pose(_traj(), 2.0)
        assert np.allclose(pose.translation, [2.0, 2.0, 0.0], atol=1e-12)

    def test_rotation_is_slerped(self):
        pose = interpolate_pose(_traj(), 0.5)
        assert pose.yaw() == pytest.approx(np.pi / 4, abs=1e-12)

    @pytest.mark.parametrize("t", [-0.1, 3.0001, 100.0])
    def test_outside_span_raises(self, t):
        with pytest.raises(TrajectoryRangeError):
            interpolate_pose(_traj(), t)

    def test_empty_trajectory_raises(self):
        with pytest.raises(ConfigError):
            interpolate_pose([], 0.0)

    def test_endpoints_included(self):
        traj = _traj()
        assert np.array_equal(interpolate_pose(traj, 0.0).translation, traj[0].pose.translation)
        assert np.array_equal(interpolate_pose(traj, 3.0).translation, traj[-1].pose.translation)


class TestVoxelIndex:
    def test_floor_convention(self):
        assert voxel_index((0.6, 0.1, -0.3), (0.0, 0.0, 0.0), 0.5) == (1, 0, -1)

    def test_origin_shift(self):
        assert voxel_index((0.6, 0.1, -0.3), (0.5, 0.0, -0.5), 0.5) == (0, 0, 0)

    def test_nonpositive_size_rejected(self):
        with pytest.raises(ConfigError):
            voxel_index((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0)
        with pytest.raises(ConfigError):
            voxel_indices(np.zeros((1, 3)), (0.0, 0.0, 0.0), -1.0)

    @given(
        st.lists(st.tuples(coords, coords, coords), min_size=1, max_size=20),
        st.floats(min_value=0.01, max_value=5.0),
    )
    @settings(max_examples=50)
    def test_batch_matches_scalar(self, pts, size):
        arr = np.array(pts, dtype=np.float64)
        batch = voxel_indices(arr, (0.0, 0.0, 0.0), size)
        for row, p in zip(batch, pts):
            assert tuple(row) == voxel_index(p, (0.0, 0.0, 0.0), size)

    def test_boundary_belongs_to_upper_cell(self):
        assert voxel_index((0.5, 0.0, 0.0), (0.0, 0.0, 0.0), 0.5)[0] == 1
        assert voxel_index((-0.5, 0.0, 0.0), (0.0, 0.0, 0.0), 0.5)[0] == -1
