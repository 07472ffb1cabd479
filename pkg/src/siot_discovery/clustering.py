"""k-means over embedding vectors (k-means++ seeding, Lloyd iterations)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import TooFewPoints
from .rng import derive_rng


@dataclass(frozen=True)
class KMeansConfig:
    k: int | None = None  # None picks round(sqrt(n / 2))
    max_iterations: int = 100
    tolerance: float = 1e-6
    seed: int = 0
    n_init: int = 1

    def __post_init__(self) -> None:
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iterations < 1 or self.tolerance < 0.0:
            raise ValueError("max_iterations >= 1 and tolerance >= 0 required")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")


@dataclass(frozen=True)
class ClusteringResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations_run: int
    inertia_history: tuple[float, ...]

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    def members(self, cluster: int) -> np.ndarray:
        return np.nonzero(self.assignments == cluster)[0]


def default_k(n_points: int) -> int:
    return max(1, int(round(math.sqrt(n_points / 2.0))))


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (centroids * centroids).sum(axis=1)[None, :]
        - 2.0 * points @ centroids.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _plus_plus_seed(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = _squared_distances(points, centroids[:1]).ravel()
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            cum = np.cumsum(closest / total)
            cum[-1] = 1.0
            pick = int(np.searchsorted(cum, rng.random(), side="right"))
            pick = min(pick, n - 1)
        centroids[j] = points[pick]
        d_new = _squared_distances(points, centroids[j : j + 1]).ravel()
        np.minimum(closest, d_new, out=closest)
    return centroids


def kmeans_fit(points: np.ndarray, config: KMeansConfig) -> ClusteringResult:
    """Cluster rows of ``points``; squared-euclidean objective.

    Ties assign to the lowest centroid index; a cluster that empties is
    re-seeded to the point currently farthest from its assigned centroid.
    The recorded inertia history (one entry per assignment pass) never
    increases. With ``n_init > 1`` the whole fit reruns from fresh seedings
    and the lowest-inertia run wins (first winner on exact ties).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty (n, dim) array")
    n = points.shape[0]
    k = config.k if config.k is not None else default_k(n)
    if k > n:
        raise TooFewPoints(f"k={k} clusters but only {n} points")

    best: ClusteringResult | None = None
    for attempt in range(config.n_init):
        # attempt 0 keeps the historical stream so n_init=1 is unchanged
        rng = (
            derive_rng(config.seed, "kmeans")
            if attempt == 0
            else derive_rng(config.seed, "kmeans", attempt)
        )
        result = _fit_once(points, k, rng, config)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def _fit_once(
    points: np.ndarray, k: int, rng: np.random.Generator, config: KMeansConfig
) -> ClusteringResult:
    n = points.shape[0]
    centroids = _plus_plus_seed(points, k, rng)

    history: list[float] = []
    assignments = np.zeros(n, dtype=np.int64)
    iterations = 0
    for _ in range(config.max_iterations):
        iterations += 1
        d2 = _squared_distances(points, centroids)
        assignments = d2.argmin(axis=1)
        member_d2 = d2[np.arange(n), assignments]
        history.append(float(member_d2.sum()))

        new_centroids = centroids.copy()
        for j in range(k):
            mask = assignments == j
            if mask.any():
                new_centroids[j] = points[mask].mean(axis=0)
        empties = [j for j in range(k) if not np.any(assignments == j)]
        spent = member_d2.copy()
        for j in empties:
            far = int(spent.argmax())
            new_centroids[j] = points[far]
            spent[far] = -1.0

        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift <= config.tolerance:
            break

    # align assignments with the final centroids
    d2 = _squared_distances(points, centroids)
    assignments = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), assignments].sum())
    history.append(inertia)

    return ClusteringResult(
        centroids=centroids,
        assignments=assignments,
        inertia=inertia,
        iterations_run=iterations,
        inertia_history=tuple(history),
    )


def assign_cluster(result: ClusteringResult, vector: np.ndarray) -> int:
    """Nearest centroid for a new vector; ties pick the lowest index."""
    vector = np.asarray(vector, dtype=np.float64)
    d2 = ((result.centroids - vector[None, :]) ** 2).sum(axis=1)
    return int(d2.argmin())


def clustering_to_json(result: ClusteringResult) -> str:
    payload = {
        "centroids": result.centroids.tolist(),
        "assignments": result.assignments.tolist(),
        "inertia": result.inertia,
        "iterations_run": result.iterations_run,
        "inertia_history": list(result.inertia_history),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def clustering_from_json(text: str) -> ClusteringResult:
    payload = json.loads(text)
    return ClusteringResult(
        centroids=np.asarray(payload["centroids"], dtype=np.float64),
        assignments=np.asarray(payload["assignments"], dtype=np.int64),
        inertia=float(payload["inertia"]),
        iterations_run=int(payload["iterations_run"]),
        inertia_history=tuple(float(x) for x in payload["inertia_history"]),
    )
