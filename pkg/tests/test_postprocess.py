import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from taskmap import ObjectCluster, fit_obb, knn_filter, select_fraction, select_top_k


class TestKnnFilter:
    def test_far_point_removed(self):
        rng = np.random.default_rng(0)
        pts = np.vstack([rng.uniform(-0.5, 0.5, size=(100, 3)), [[10.0, 10.0, 10.0]]])
        kept = knn_filter(pts, k=8, alpha=2.0)
        assert 100 not in kept
        assert len(kept) >= 95

    def test_identical_points_all_kept(self):
        pts = np.zeros((20, 3))
        assert len(knn_filter(pts)) == 20

    def test_small_set_guard(self):
        pts = np.random.default_rng(1).uniform(size=(8, 3))
        assert len(knn_filter(pts, k=8)) == 8

    def test_scale_equivariance(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(60, 3))
        kept = knn_filter(pts)
        kept_scaled = knn_filter(pts * 1000.0)
        assert np.array_equal(kept, kept_scaled)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            knn_filter(np.zeros((5, 3)), k=0)


class TestFitObb:
    def test_unit_cube_corners(self):
        corners = np.array(
            [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)],
            dtype=np.float64,
        )
        box = fit_obb(corners)
        assert box.center == pytest.approx([0.5, 0.5, 0.5])
        assert sorted(box.half_extents) == pytest.approx([0.5, 0.5, 0.5])

    def test_single_point_floors(self):
        box = fit_obb([(1.0, 2.0, 3.0)])
        assert box.center == pytest.approx([1.0, 2.0, 3.0])
        assert np.all(box.half_extents == 1e-4)
        assert np.allclose(box.rotation, np.eye(3))

    def test_rotated_box_recovers_axes(self):
        rot = Rotation.from_euler("xyz", [0.3, -0.5, 0.9]).as_matrix()
        grid = np.stack(
            np.meshgrid(
                np.linspace(-1.0, 1.0, 9),
                np.linspace(-0.4, 0.4, 7),
                np.linspace(-0.1, 0.1, 5),
                indexing="ij",
            ),
            axis=-1,
        ).reshape(-1, 3)
        pts = grid @ rot.T + np.array([2.0, -1.0, 0.5])
        box = fit_obb(pts)
        # Axes must match the generating rotation up to sign, within 1e-3 rad.
        cosines = np.abs(np.diag(box.rotation.T @ rot))
        assert np.all(np.arccos(np.clip(cosines, 0, 1)) < 1e-3)
        assert box.half_extents == pytest.approx([1.0, 0.4, 0.1], abs=1e-6)

    def test_contains_all_points(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            pts = rng.normal(size=(rng.integers(2, 40), 3)) * rng.uniform(0.1, 5)
            box = fit_obb(pts)
            local = np.abs((pts - box.center) @ box.rotation)
            assert np.all(local <= box.half_extents + 1e-6)

    def test_right_handed(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pts = rng.normal(size=(15, 3))
            box = fit_obb(pts)
            assert np.linalg.det(box.rotation) == pytest.approx(1.0, abs=1e-9)


def _cluster(cid, dist):
    return ObjectCluster(
        id=cid, primitive_ids=set(), gaussian_ids=set(), task_dist=np.asarray(dist)
    )


class TestSelectTopK:
    def test_orders_by_probability(self):
        clusters = [_cluster(0, [0.7, 0.3]), _cluster(1, [0.2, 0.8]), _cluster(2, [0.5, 0.5])]
        top = select_top_k(clusters, 0, 2)
        assert [c.id for c in top] == [0, 2]

    def test_k_exceeding_count_returns_all(self):
        clusters = [_cluster(0, [0.7, 0.3])]
        assert [c.id for c in select_top_k(clusters, 0, 5)] == [0]

    def test_tie_breaks_to_lower_id(self):
        clusters = [_cluster(3, [0.5, 0.5]), _cluster(1, [0.5, 0.5])]
        assert [c.id for c in select_top_k(clusters, 0, 2)] == [1, 3]

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(5)
        probs = rng.uniform(0.01, 0.99, size=10)
        base = [_cluster(i, [p, 1 - p]) for i, p in enumerate(probs)]
        squared = [_cluster(i, [p**2, 1 - p**2]) for i, p in enumerate(probs)]
        assert [c.id for c in select_top_k(base, 0, 10)] == [
            c.id for c in select_top_k(squared, 0, 10)
        ]


class TestSelectFraction:
    def test_fraction_of_best_threshold(self):
        clusters = [_cluster(0, [1.0, 0]), _cluster(1, [0.85, 0.15]), _cluster(2, [0.7, 0.3])]
        got = select_fraction(clusters, 0, 0.8)
        assert {c.id for c in got} == {0, 1}

    def test_single_cluster(self):
        c = _cluster(0, [0.4, 0.6])
        assert select_fraction([c], 0) == [c]

    def test_fraction_one_keeps_argmax_only(self):
        clusters = [_cluster(0, [0.9, 0.1]), _cluster(1, [0.8, 0.2])]
        assert [c.id for c in select_fraction(clusters, 0, 1.0)] == [0]

    def test_monotone_in_fraction(self):
        rng = np.random.default_rng(6)
        clusters = [_cluster(i, [p, 1 - p]) for i, p in enumerate(rng.uniform(size=12))]
        tight = {c.id for c in select_fraction(clusters, 0, 1.0)}
        for f in (0.9, 0.6, 0.3, 0.1):
            loose = {c.id for c in select_fraction(clusters, 0, f)}
            assert tight <= loose
            tight = loose

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_fraction([], 0, 0.8)
