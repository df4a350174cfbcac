"""Coverage planning: seeded K-means++ over user positions with radius extraction.

Clusters 2-D user coordinates into spot beams, iterating centroid means until
the largest centroid displacement falls below a tolerance, then sets each beam
radius to the ceiling of its farthest member distance, clamped to the allowed
range.  Everything is deterministic under a fixed seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterResult:
    """Assignments, centroids, radii, and convergence bookkeeping."""

    assignments: np.ndarray           # user index -> cluster
    centroids: np.ndarray             # (M, 2) km
    radii_km: np.ndarray | None = None
    iterations: int = 0
    converged: bool = False
    clamped_down: list = field(default_factory=list)   # clusters whose raw radius exceeded r_max
    uncovered: list = field(default_factory=list)      # user indices outside their clamped beam

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def feasible(self) -> bool:
        return not self.uncovered

    def members(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == m)

    def coverage_area_km2(self) -> float:
        if self.radii_km is None:
            raise ValueError("radii not extracted yet")
        return float(np.sum(math.pi * self.radii_km**2))


def kmeans_pp_seed(points, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """Draw initial centroids by distance-squared-weighted sequential sampling."""
    pts = np.asarray(points, dtype=float)
    distinct = np.unique(pts, axis=0)
    if n_clusters > distinct.shape[0]:
        raise ValueError(
            f"cannot place {n_clusters} seeds among {distinct.shape[0]} distinct points"
        )
    seeds = np.empty((n_clusters, pts.shape[1]))
    first = rng.integers(pts.shape[0])
    seeds[0] = pts[first]
    d2 = np.sum((pts - seeds[0]) ** 2, axis=1)
    for k in range(1, n_clusters):
        total = d2.sum()
        if total <= 0:
            # all remaining mass sits on chosen seeds; pick any unused distinct point
            unused = distinct[~(distinct[:, None] == seeds[:k]).all(axis=2).any(axis=1)]
            seeds[k] = unused[rng.integers(unused.shape[0])]
        else:
            idx = rng.choice(pts.shape[0], p=d2 / total)
            seeds[k] = pts[idx]
        d2 = np.minimum(d2, np.sum((pts - seeds[k]) ** 2, axis=1))
    return seeds


def _assign(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


def _repair_empty(pts, assignments, centroids):
    """Give every empty cluster the farthest point of the currently largest one."""
    counts = np.bincount(assignments, minlength=centroids.shape[0])
    for m in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        members = np.flatnonzero(assignments == donor)
        dist = np.sum((pts[members] - centroids[donor]) ** 2, axis=1)
        stolen = members[int(np.argmax(dist))]
        assignments[stolen] = m
        centroids[m] = pts[stolen]
        counts = np.bincount(assignments, minlength=centroids.shape[0])
    return assignments, centroids


def kmeans_iterate(points, seeds, eps: float = 1e-6, max_iter: int = 100) -> ClusterResult:
    """Alternate assignment and centroid-mean updates until displacement <= eps."""
    if eps <= 0:
        raise ValueError("tolerance must be positive")
    pts = np.asarray(points, dtype=float)
    centroids = np.array(seeds, dtype=float, copy=True)
    assignments = _assign(pts, centroids)
    assignments, centroids = _repair_empty(pts, assignments, centroids)
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        new_centroids = np.array(
            [pts[assignments == m].mean(axis=0) for m in range(centroids.shape[0])]
        )
        displacement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        assignments = _assign(pts, centroids)
        assignments, centroids = _repair_empty(pts, assignments, centroids)
        if displacement <= eps:
            converged = True
            break
    return ClusterResult(assignments, centroids, iterations=iterations, converged=converged)


def extract_radii(result: ClusterResult, points, r_min_km: float, r_max_km: float) -> ClusterResult:
    """Set each radius to ceil(max member distance) in km, clamped to [r_min, r_max].

    Clamping a radius down can leave members outside the beam; those users are
    recorded in ``uncovered`` and the result is flagged infeasible.
    """
    pts = np.asarray(points, dtype=float)
    radii = np.empty(result.n_clusters)
    result.clamped_down = []
    result.uncovered = []
    for m in range(result.n_clusters):
        members = result.members(m)
        dist = np.linalg.norm(pts[members] - result.centroids[m], axis=1)
        raw = math.ceil(float(dist.max())) if members.size else 0.0
        clamped = min(max(raw, r_min_km), r_max_km)
        if raw > r_max_km:
            result.clamped_down.append(m)
            result.uncovered.extend(int(u) for u in members[dist > clamped])
        radii[m] = clamped
    result.radii_km = radii
    return result


def cluster_users(
    points,
    n_clusters: int,
    rng: np.random.Generator,
    r_min_km: float = 25.0,
    r_max_km: float = 200.0,
    eps: float = 1e-6,
    max_iter: int = 100,
) -> ClusterResult:
    """Full coverage plan: seed, iterate, and extract clamped radii."""
    seeds = kmeans_pp_seed(points, n_clusters, rng)
    result = kmeans_iterate(points, seeds, eps=eps, max_iter=max_iter)
    return extract_radii(result, points, r_min_km, r_max_km)


def write_cluster_csv(path, result: ClusterResult) -> None:
    """Export one row per user: user_id, beam, centroid_x, centroid_y, radius_km."""
    if result.radii_km is None:
        raise ValueError("radii not extracted yet")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "beam", "centroid_x", "centroid_y", "radius_km"])
        for user, beam in enumerate(result.assignments):
            writer.writerow(
                [
                    user,
                    int(beam),
                    f"{result.centroids[beam, 0]:.6f}",
                    f"{result.centroids[beam, 1]:.6f}",
                    f"{result.radii_km[beam]:.1f}",
                ]
            )
