"""Clustered radio maps: k-Means, k-Medoids, fuzzy c-Means, Affinity
Propagation and DBSCAN, plus the cluster-count rules.

Clustering always happens in representation space. The fitted result is a
partition of the training indices with one representative vector per cluster:
the member centroid for k-Means, c-Means and DBSCAN, the medoid point for
k-Medoids and the exemplar point for Affinity Propagation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.cluster import DBSCAN, AffinityPropagation

CLUSTER_ALGOS = ("kmeans", "kmedoids", "cmeans", "affinity", "dbscan")


@dataclass
class ClusteredRadioMap:
    """Immutable result of clustering a represented radio map."""

    representatives: np.ndarray  # (n_clusters, dim)
    member_indices: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.representatives.shape[0] != len(self.member_indices):
            raise ValueError("one representative per cluster required")
        if any(len(m) == 0 for m in self.member_indices):
            raise ValueError("empty cluster")

    @property
    def n_clusters(self) -> int:
        return self.representatives.shape[0]

    @classmethod
    def single_cluster(cls, features: np.ndarray) -> "ClusteredRadioMap":
        features = np.asarray(features, dtype=float)
        return cls(
            representatives=features.mean(axis=0, keepdims=True),
            member_indices=[np.arange(features.shape[0])],
        )


def cluster_count(rule: str | int, n_train: int) -> int:
    """Resolve a cluster-count rule for a radio map of ``n_train`` samples.

    Rules: an integer or ``"fixed:N"`` (capped at n_train), ``"rfp1"``
    (rounded square root of n_train) and ``"rfp2"`` (n_train / 25, rounded).
    """
    if n_train < 1:
        raise ValueError("n_train must be positive")
    if isinstance(rule, int):
        if rule < 1:
            raise ValueError("fixed cluster count must be >= 1")
        return min(rule, n_train)
    if rule.startswith("fixed:"):
        return cluster_count(int(rule.split(":", 1)[1]), n_train)
    if rule == "rfp1":
        return max(1, round(math.sqrt(n_train)))
    if rule == "rfp2":
        return max(1, round(n_train / 25))
    raise ValueError(f"unknown count rule {rule!r}")


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[i] = X[idx]
        d2 = np.minimum(d2, ((X - centers[i]) ** 2).sum(axis=1))
    return centers


def _assign(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2


def _lloyd_kmeans(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, bool]:
    centers = _kmeans_pp_init(X, k, rng)
    prev_sse = np.inf
    converged = False
    labels, d2 = _assign(X, centers)
    for _ in range(max_iter):
        sse = float(d2[np.arange(X.shape[0]), labels].sum())
        assert sse <= prev_sse + 1e-8, "k-means SSE increased"
        new_centers = centers.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new_centers[c] = X[members].mean(axis=0)
            else:
                # reseed an empty cluster with the worst-fit point
                new_centers[c] = X[np.argmax(d2[np.arange(X.shape[0]), labels])]
        shift = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        labels, d2 = _assign(X, centers)
        if shift <= tol:
            converged = True
            break
        prev_sse = sse
    return centers, labels, converged


def _kmedoids(
    X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int
) -> tuple[np.ndarray, np.ndarray, bool]:
    # Alternating assignment/update (Voronoi iteration) with k-means++ seeding.
    n = X.shape[0]
    d2_init = None
    medoids = np.empty(k, dtype=int)
    medoids[0] = rng.integers(n)
    d2_init = ((X - X[medoids[0]]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2_init.sum()
        medoids[i] = rng.integers(n) if total <= 0 else rng.choice(n, p=d2_init / total)
        d2_init = np.minimum(d2_init, ((X - X[medoids[i]]) ** 2).sum(axis=1))
    converged = False
    for _ in range(max_iter):
        labels, _ = _assign(X, X[medoids])
        new_medoids = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(labels == c)
            if len(members) == 0:
                continue
            pair = np.linalg.norm(X[members][:, None, :] - X[members][None, :, :], axis=2)
            new_medoids[c] = members[np.argmin(pair.sum(axis=1))]
        if np.array_equal(new_medoids, medoids):
            converged = True
            break
        medoids = new_medoids
    labels, _ = _assign(X, X[medoids])
    return medoids, labels, converged


def _cmeans(
    X: np.ndarray, k: int, m: float, rng: np.random.Generator, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, bool]:
    centers = _kmeans_pp_init(X, k, rng)
    converged = False
    exponent = 2.0 / (m - 1.0)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        d2 = np.maximum(d2, 1e-12)
        inv = d2 ** (-exponent / 2.0)
        U = inv / inv.sum(axis=1, keepdims=True)
        assert np.allclose(U.sum(axis=1), 1.0, atol=1e-9), "memberships must sum to 1"
        Um = U**m
        new_centers = (Um.T @ X) / Um.sum(axis=0)[:, None]
        shift = float(np.linalg.norm(new_centers - centers))
        centers = new_centers
        if shift <= tol:
            converged = True
            break
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)  # defuzzified assignment
    return centers, labels, converged


class RadioMapClusterer(BaseEstimator):
    """Builds a :class:`ClusteredRadioMap` from a represented radio map.

    Parameters mirror the experiment config: ``algo`` is one of
    ``kmeans | kmedoids | cmeans | affinity | dbscan`` and ``count_rule`` is
    ``fixed:N | rfp1 | rfp2`` (ignored by affinity and dbscan, which determine
    their own cluster count). ``eps=None`` selects the median 4-NN distance
    over the radio map for DBSCAN.
    """

    def __init__(
        self,
        algo: str = "kmeans",
        count_rule: str | int = "rfp1",
        fuzz_m: float = 2.0,
        damping: float = 0.9,
        max_iter: int = 100,
        tol: float = 1e-4,
        eps: float | None = None,
        min_pts: int = 5,
        seed: int = 0,
    ):
        self.algo = algo
        self.count_rule = count_rule
        self.fuzz_m = fuzz_m
        self.damping = damping
        self.max_iter = max_iter
        self.tol = tol
        self.eps = eps
        self.min_pts = min_pts
        self.seed = seed

    def _validate(self):
        if self.algo not in CLUSTER_ALGOS:
            raise ValueError(f"unknown clustering algo {self.algo!r}")
        if self.fuzz_m <= 1:
            raise ValueError("fuzz_m must be > 1")
        if not (0.5 < self.damping < 1):
            raise ValueError("damping must lie in (0.5, 1)")

    def _dbscan_eps(self, X: np.ndarray) -> float:
        d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
        d_sorted = np.sort(d, axis=1)
        kth = d_sorted[:, min(4, X.shape[0] - 1)]
        eps = float(np.median(kth))
        return eps if eps > 0 else 1.0

    def fit(self, X, y=None) -> "RadioMapClusterer":
        self._validate()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("non-empty feature matrix required")
        n = X.shape[0]
        rng = np.random.default_rng(self.seed)
        self.converged_ = True

        if np.allclose(X, X[0]):
            self.clustered_map_ = ClusteredRadioMap.single_cluster(X)
            self.labels_ = np.zeros(n, dtype=int)
            return self

        if self.algo in ("kmeans", "kmedoids", "cmeans"):
            k = cluster_count(self.count_rule, n)
            if self.algo == "kmeans":
                centers, labels, ok = _lloyd_kmeans(X, k, rng, self.max_iter, self.tol)
                reps = None  # centroids recomputed from final members below
            elif self.algo == "kmedoids":
                medoids, labels, ok = _kmedoids(X, k, rng, self.max_iter)
                reps = X[medoids]
            else:
                centers, labels, ok = _cmeans(X, k, self.fuzz_m, rng, self.max_iter, self.tol)
                reps = None
            self.converged_ = ok
            if not ok:
                warnings.warn(f"{self.algo} did not converge in {self.max_iter} iterations")
        elif self.algo == "affinity":
            model = AffinityPropagation(
                damping=self.damping,
                max_iter=max(self.max_iter, 200),
                convergence_iter=20,
                random_state=self.seed,
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model.fit(X)
            labels = model.labels_
            if labels.min() < 0:  # no exemplars found
                self.converged_ = False
                self.clustered_map_ = ClusteredRadioMap.single_cluster(X)
                self.labels_ = np.zeros(n, dtype=int)
                return self
            reps = model.cluster_centers_
        else:  # dbscan
            eps = self.eps if self.eps is not None else self._dbscan_eps(X)
            labels = DBSCAN(eps=eps, min_samples=self.min_pts).fit(X).labels_
            # noise points become singleton clusters
            next_label = labels.max() + 1
            for i in np.flatnonzero(labels == -1):
                labels[i] = next_label
                next_label += 1
            reps = None

        present = np.unique(labels)
        members = [np.flatnonzero(labels == c) for c in present]
        if reps is None:
            reps = np.vstack([X[m].mean(axis=0) for m in members])
        else:
            reps = reps[present]
        # relabel contiguously in representative order
        self.labels_ = np.empty(n, dtype=int)
        for new_c, m in enumerate(members):
            self.labels_[m] = new_c
        self.clustered_map_ = ClusteredRadioMap(
            representatives=np.asarray(reps, dtype=float), member_indices=members
        )
        return self


def build_clusters(features: np.ndarray, **params) -> ClusteredRadioMap:
    """Functional wrapper: cluster a represented radio map in one call."""
    return RadioMapClusterer(**params).fit(features).clustered_map_
