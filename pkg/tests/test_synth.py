"""Synthetic scene generation and export."""

import dataclasses

import numpy as np
import pytest

from ross.errors import ConfigError
from ross.formats import read_manifest, file_sha256
from ross.synth import (
    SceneSpec,
    generate_scene,
    load_scene_spec,
    write_scene,
    write_scene_spec,
)

_SMALL = dict(
    extent=16.0,
    scan_count=4,
    n_azimuth=36,
    n_range_bins=24,
    bev_size=(64, 64),
    bushes=((3.0, 2.0, 1.5, 0.75),),
    boxes=((5.0, -2.0, 2.0, 1.5, 2.0),),
)


def _spec(**overrides):
    kw = dict(_SMALL)
    kw.update(overrides)
    return SceneSpec(**kw)


class TestSceneSpec:
    def test_defaults_validate(self):
        SceneSpec().validate()

    def test_validation_errors(self):
        cases = [
            dict(extent=0.0),
            dict(scan_count=0),
            dict(voxel_size=0.0),
            dict(mpp=-1.0),
            dict(lidar_range=0.0),
            dict(n_azimuth=0),
            dict(dt=0.0),
            dict(extra_returns=-1),
            dict(void_fraction=1.5),
        ]
        for kw in cases:
            with pytest.raises(ConfigError):
                _spec(**kw).validate()

    def test_ini_roundtrip_exact(self, tmp_path):
        spec = _spec(seed=777, ground_slope=(0.03125, -0.015625))
        path = tmp_path / "scene.ini"
        write_scene_spec(spec, path)
        back = load_scene_spec(path)
        assert back == spec

    def test_default_roundtrip_exact(self, tmp_path):
        spec = SceneSpec()
        path = tmp_path / "scene.ini"
        write_scene_spec(spec, path)
        assert load_scene_spec(path) == spec

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scene_spec(tmp_path / "absent.ini")


class TestGenerateScene:
    def test_deterministic(self):
        a = generate_scene(_spec())
        b = generate_scene(_spec())
        assert len(a.scans) == len(b.scans) == 4
        for sa, sb in zip(a.scans, b.scans):
            assert np.array_equal(sa.points, sb.points)
            assert np.array_equal(sa.labels, sb.labels)
        for fa, fb in zip(a.radar_frames, b.radar_frames):
            assert np.array_equal(fa.energy, fb.energy)
        for ga, gb in zip(a.gt_label_images, b.gt_label_images):
            assert np.array_equal(ga.classes, gb.classes)

    def test_seed_changes_data(self):
        a = generate_scene(_spec(seed=1))
        b = generate_scene(_spec(seed=2))
        assert not np.array_equal(a.scans[0].points, b.scans[0].points)

    def test_counts_match_spec(self):
        scene = generate_scene(_spec())
        spec = scene.spec
        assert len(scene.scans) == spec.scan_count
        assert len(scene.radar_frames) == spec.scan_count
        assert len(scene.gt_label_images) == spec.scan_count
        assert len(scene.traj) == spec.scan_count
        for frame in scene.radar_frames:
            assert frame.energy.shape == (spec.n_azimuth, spec.n_range_bins)
        for img in scene.gt_label_images:
            assert img.classes.shape == spec.bev_size

    def test_scan_points_within_range(self):
        scene = generate_scene(_spec())
        r = scene.spec.lidar_range
        for scan in scene.scans:
            d = np.sqrt(scan.points[:, 0] ** 2 + scan.points[:, 1] ** 2)
            assert (d <= r + 1e-6).all()

    def test_scan_heights_relative_to_sensor(self):
        """Ground sites sit below the sensor by roughly the mast height."""
        scene = generate_scene(_spec(bushes=(), boxes=(), ground_slope=(0.0, 0.0)))
        spec = scene.spec
        for scan in scene.scans:
            z = scan.points[:, 2]
            want = spec.ground_base - spec.lidar_height
            assert np.allclose(z, np.float32(want), atol=1e-6)

    def test_ground_only_scene_labels(self):
        scene = generate_scene(
            _spec(bushes=(), boxes=(), void_fraction=0.0, extra_returns=0)
        )
        ground_ids = {1, 4, 5}
        for scan in scene.scans:
            assert set(np.unique(scan.labels)) <= ground_ids

    def test_ground_only_gt_all_ground_in_coverage(self):
        scene = generate_scene(
            _spec(bushes=(), boxes=(), void_fraction=0.0, extra_returns=0)
        )
        img = scene.gt_label_images[0].classes
        assert set(np.unique(img)) <= {0, 1}
        assert (img == 1).sum() > 0

    def test_void_labels_present_when_requested(self):
        scene = generate_scene(_spec(void_fraction=0.5))
        void_ids = {0, 18, 19}
        seen = set(np.unique(scene.scans[0].labels))
        assert seen & void_ids

    def test_box_footprint_in_gt(self):
        """A box centered at (5, -2) spanning 2.0 x 1.5 m shows up as an
        Obstacles block of the right size, give or take one pixel per side."""
        spec = _spec(bushes=(), void_fraction=0.0, extra_returns=0)
        scene = generate_scene(spec)
        img = scene.gt_label_images[0].classes
        rows, cols = np.nonzero(img == 3)
        assert len(rows) > 0
        cr, cc = spec.bev_size[0] // 2, spec.bev_size[1] // 2
        # the extrinsic maps lidar to radar coordinates, so the radar origin
        # sits at minus its translation relative to the scan position
        rx = spec.scan_start[0] - spec.extrinsic[0]
        ry = spec.scan_start[1] - spec.extrinsic[1]
        x_lo = (cols.min() - cc) * spec.mpp + rx
        x_hi = (cols.max() - cc) * spec.mpp + rx
        y_lo = (cr - rows.max()) * spec.mpp + ry
        y_hi = (cr - rows.min()) * spec.mpp + ry
        assert x_lo == pytest.approx(5.0 - 1.0, abs=spec.mpp)
        assert x_hi == pytest.approx(5.0 + 1.0, abs=spec.mpp)
        assert y_lo == pytest.approx(-2.0 - 0.75, abs=spec.mpp)
        assert y_hi == pytest.approx(-2.0 + 0.75, abs=spec.mpp)

    def test_bush_energy_band(self):
        """Radar cells over a bush draw from the bush energy distribution."""
        spec = _spec(boxes=(), seed=5)
        scene = generate_scene(spec)
        frame = scene.radar_frames[0]
        mean, std = spec.bushes_energy
        # sample the cell pointing at the bush at (3, 2); the radar origin is
        # the scan position minus the extrinsic translation
        dx = 3.0 - (spec.scan_start[0] - spec.extrinsic[0])
        dy = 2.0 - (spec.scan_start[1] - spec.extrinsic[1])
        theta = np.arctan2(dy, dx)
        a = int(np.floor((theta - spec.azimuth_0) / frame.azimuth_step + 0.5))
        b = int(np.floor(np.hypot(dx, dy) / spec.range_resolution + 0.5))
        v = int(frame.energy[a % spec.n_azimuth, b])
        assert abs(v - mean) < 6 * std

    def test_trajectory_timestamps(self):
        scene = generate_scene(_spec(t0=1.0, dt=0.25))
        times = [p.timestamp for p in scene.traj]
        assert times == [1.0, 1.25, 1.5, 1.75]


class TestWriteScene:
    def test_layout_and_manifest(self, tmp_path):
        scene = generate_scene(_spec(scan_count=3))
        write_scene(scene, tmp_path / "scene", channels=1)
        root = tmp_path / "scene"
        for rel in (
            "trajectory.txt",
            "calibration.txt",
            "scene.ini",
            "run.ini",
            "manifest.txt",
        ):
            assert (root / rel).exists(), rel
        assert sorted(p.name for p in (root / "scans").glob("*.bin")) == [
            "frame_000000.bin",
            "frame_000001.bin",
            "frame_000002.bin",
        ]
        assert len(list((root / "radar").glob("*.png"))) == 3
        assert len(list((root / "gt").glob("*_label.png"))) == 3
        header, entries = read_manifest(root / "manifest.txt")
        assert header["frames"] == "3"
        for rel, digest in entries.items():
            assert file_sha256(root / rel) == digest

    def test_channels_recorded(self, tmp_path):
        scene = generate_scene(_spec(scan_count=3))
        write_scene(scene, tmp_path / "s3", channels=3)
        text = (tmp_path / "s3" / "run.ini").read_text()
        assert "channels = 3" in text

    def test_bad_channels(self, tmp_path):
        scene = generate_scene(_spec())
        with pytest.raises(ConfigError):
            write_scene(scene, tmp_path / "bad", channels=2)

    def test_written_spec_regenerates_identically(self, tmp_path):
        scene = generate_scene(_spec())
        write_scene(scene, tmp_path / "scene")
        spec_back = load_scene_spec(tmp_path / "scene" / "scene.ini")
        again = generate_scene(spec_back)
        for sa, sb in zip(scene.scans, again.scans):
            assert np.array_equal(sa.points, sb.points)
            assert np.array_equal(sa.labels, sb.labels)
