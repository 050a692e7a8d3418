import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robust3dcil.cloud import PointCloud, normalize_unit_ball
from robust3dcil.errors import InvalidInputError

finite_points = arrays(
    np.float64,
    st.tuples(st.integers(1, 40), st.just(3)),
    elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False),
)


class TestPointCloud:
    def test_count_matches_points(self, rng):
        cloud = PointCloud(rng.normal(size=(17, 3)))
        assert cloud.count == 17
        assert len(cloud) == 17

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            PointCloud(np.zeros((0, 3)))

    def test_rejects_nan_and_inf(self):
        bad = np.zeros((4, 3))
        bad[2, 1] = np.nan
        with pytest.raises(InvalidInputError):
            PointCloud(bad)
        bad[2, 1] = np.inf
        with pytest.raises(InvalidInputError):
            PointCloud(bad)

    def test_rejects_wrong_shape(self):
        with pytest.raises(InvalidInputError):
            PointCloud(np.zeros((4, 2)))

    def test_points_are_immutable(self, random_cloud):
        with pytest.raises(ValueError):
            random_cloud.points[0, 0] = 7.0

    def test_equality_by_value(self, rng):
        pts = rng.normal(size=(8, 3))
        assert PointCloud(pts) == PointCloud(pts.copy())
        assert PointCloud(pts) != PointCloud(pts + 1.0)


class TestNormalizeUnitBall:
    def test_cube_corners(self):
        """Symmetric cube at +-2 maps to corners at +-1/sqrt(3)."""
        corners = np.array(
            [[sx, sy, sz] for sx in (-2, 2) for sy in (-2, 2) for sz in (-2, 2)],
            dtype=np.float64,
        )
        out = normalize_unit_ball(PointCloud(corners))
        np.testing.assert_allclose(np.abs(out.points), 1 / np.sqrt(3), atol=1e-12)
        np.testing.assert_allclose(out.points.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(
            np.linalg.norm(out.points, axis=1).max(), 1.0, atol=1e-12
        )

    def test_degenerate_repeated_point(self):
        cloud = PointCloud(np.tile([5.0, 5.0, 5.0], (4, 1)))
        out = normalize_unit_ball(cloud)
        np.testing.assert_array_equal(out.points, np.zeros((4, 3)))

    def test_uniform_cube_cloud(self):
        """Centroid and max norm recomputed directly from the output."""
        pts = np.random.default_rng(7).uniform(0.0, 1.0, size=(100, 3))
        out = normalize_unit_ball(PointCloud(pts))
        centroid = out.points.mean(axis=0)
        assert np.all(np.abs(centroid) <= 1e-6)
        max_norm = np.linalg.norm(out.points, axis=1).max()
        assert abs(max_norm - 1.0) <= 1e-9

    def test_preserves_order(self, rng):
        pts = rng.normal(size=(32, 3))
        out = normalize_unit_ball(PointCloud(pts))
        order = np.argsort(pts[:, 0], kind="stable")
        np.testing.assert_array_equal(
            np.argsort(out.points[:, 0], kind="stable"), order
        )

    @settings(max_examples=60, deadline=None)
    @given(finite_points)
    def test_idempotent(self, pts):
        once = normalize_unit_ball(PointCloud(pts))
        twice = normalize_unit_ball(once)
        np.testing.assert_allclose(twice.points, once.points, atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(finite_points)
    def test_output_inside_unit_ball(self, pts):
        out = normalize_unit_ball(PointCloud(pts))
        assert np.linalg.norm(out.points, axis=1).max() <= 1.0 + 1e-12
