import math

import numpy as np
import pytest

from flare_leo.clustering import (
    ClusterResult,
    cluster_users,
    extract_radii,
    kmeans_iterate,
    kmeans_pp_seed,
    write_cluster_csv,
)


def hotspot_points(rng, n_users=45, n_hotspots=7, field_km=500.0, spread_km=45.0):
    centers = rng.uniform(-field_km, field_km, size=(n_hotspots, 2))
    choice = rng.integers(n_hotspots, size=n_users)
    return centers[choice] + rng.normal(scale=spread_km, size=(n_users, 2))


def wcss(points, result):
    return float(
        sum(
            np.sum((points[result.members(m)] - result.centroids[m]) ** 2)
            for m in range(result.n_clusters)
        )
    )


class TestSeeding:
    def test_all_points_become_seeds(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-100, 100, size=(6, 2))
        seeds = kmeans_pp_seed(pts, 6, np.random.default_rng(1))
        assert sorted(map(tuple, seeds)) == sorted(map(tuple, pts))

    def test_single_seed_is_a_point(self):
        pts = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        seeds = kmeans_pp_seed(pts, 1, np.random.default_rng(5))
        assert any(np.array_equal(seeds[0], p) for p in pts)

    def test_two_far_clusters_split_seeds(self):
        rng = np.random.default_rng(7)
        left = rng.normal(loc=(-500.0, 0.0), scale=5.0, size=(20, 2))
        right = rng.normal(loc=(500.0, 0.0), scale=5.0, size=(20, 2))
        pts = np.vstack([left, right])
        hits = 0
        for seed in range(1000):
            seeds = kmeans_pp_seed(pts, 2, np.random.default_rng(seed))
            sides = {s[0] < 0 for s in seeds}
            hits += len(sides) == 2
        assert hits >= 990

    def test_too_many_seeds_rejected(self):
        pts = np.zeros((5, 2))
        with pytest.raises(ValueError):
            kmeans_pp_seed(pts, 2, np.random.default_rng(0))

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(size=(30, 2))
        a = kmeans_pp_seed(pts, 4, np.random.default_rng(11))
        b = kmeans_pp_seed(pts, 4, np.random.default_rng(11))
        assert np.array_equal(a, b)


class TestIteration:
    def test_separated_points_converge_immediately(self):
        pts = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]])
        result = kmeans_iterate(pts, pts.copy(), eps=1e-9)
        assert result.converged and result.iterations == 1
        assert np.allclose(result.centroids, pts)

    def test_identical_points_single_cluster(self):
        pts = np.tile([[3.0, 4.0]], (10, 1))
        result = kmeans_iterate(pts, np.array([[0.0, 0.0]]), eps=1e-9)
        assert np.allclose(result.centroids, [[3.0, 4.0]])

    def test_wcss_close_to_multi_restart_oracle(self):
        rng = np.random.default_rng(21)
        pts = np.vstack(
            [rng.normal((-50, 0), 8.0, size=(40, 2)), rng.normal((50, 0), 8.0, size=(40, 2))]
        )
        best = math.inf
        for restart in range(50):
            seeds = kmeans_pp_seed(pts, 2, np.random.default_rng(restart))
            best = min(best, wcss(pts, kmeans_iterate(pts, seeds, eps=1e-6)))
        seeds = kmeans_pp_seed(pts, 2, np.random.default_rng(1234))
        got = wcss(pts, kmeans_iterate(pts, seeds, eps=1e-6))
        assert got <= best * 1.01

    def test_no_empty_clusters(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-10, 10, size=(25, 2))
        # adversarial seeds stacked on one point
        seeds = np.tile(pts[:1], (5, 1)) + rng.normal(scale=1e-9, size=(5, 2))
        result = kmeans_iterate(pts, seeds)
        counts = np.bincount(result.assignments, minlength=5)
        assert np.all(counts > 0)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            kmeans_iterate(np.zeros((3, 2)), np.zeros((1, 2)), eps=0.0)


class TestRadii:
    def test_singleton_clamps_up(self):
        pts = np.array([[0.0, 0.0], [300.0, 0.0]])
        result = kmeans_iterate(pts, pts.copy())
        result = extract_radii(result, pts, 25.0, 200.0)
        assert np.allclose(result.radii_km, [25.0, 25.0])

    def test_ceiling_to_whole_km(self):
        pts = np.array([[0.0, 0.0], [137.2, 0.0]])
        result = ClusterResult(np.array([0, 0]), np.array([[0.0, 0.0]]))
        result = extract_radii(result, pts, 25.0, 200.0)
        assert result.radii_km[0] == 138.0

    def test_clamp_down_reports_uncovered(self):
        pts = np.array([[0.0, 0.0], [250.0, 0.0]])
        result = ClusterResult(np.array([0, 0]), np.array([[0.0, 0.0]]))
        result = extract_radii(result, pts, 25.0, 200.0)
        assert result.clamped_down == [0]
        assert result.uncovered == [1]
        assert not result.feasible

    def test_scenario_radii_within_limits(self):
        rng = np.random.default_rng(42)
        pts = hotspot_points(rng)
        result = cluster_users(pts, 8, np.random.default_rng(9))
        assert result.feasible
        assert np.all(result.radii_km >= 25.0) and np.all(result.radii_km <= 200.0)
        # every user actually inside the clamped beam
        for m in range(result.n_clusters):
            members = result.members(m)
            dist = np.linalg.norm(pts[members] - result.centroids[m], axis=1)
            assert np.all(dist <= result.radii_km[m] + 1e-9)


class TestPipeline:
    def test_deterministic(self):
        rng = np.random.default_rng(4)
        pts = hotspot_points(rng)
        a = cluster_users(pts, 8, np.random.default_rng(77))
        b = cluster_users(pts, 8, np.random.default_rng(77))
        assert np.array_equal(a.assignments, b.assignments)
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.radii_km, b.radii_km)

    def test_coverage_area_shrinks_with_more_beams(self):
        # statistical: mean covered area over seeds is nonincreasing in M;
        # radius clamps lifted so the raw covering objective is measured
        means = []
        for n_clusters in (2, 4, 8):
            areas = []
            for seed in range(20):
                pts = hotspot_points(np.random.default_rng(1000 + seed))
                result = cluster_users(
                    pts, n_clusters, np.random.default_rng(seed), r_min_km=0.0, r_max_km=1e9
                )
                areas.append(result.coverage_area_km2())
            means.append(np.mean(areas))
        assert means[0] >= means[1] * 0.99
        assert means[1] >= means[2] * 0.99

    def test_csv_export(self, tmp_path):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [100.0, 100.0]])
        result = cluster_users(pts, 2, np.random.default_rng(0))
        out = tmp_path / "clusters.csv"
        write_cluster_csv(out, result)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "user_id,beam,centroid_x,centroid_y,radius_km"
        assert len(lines) == 4
