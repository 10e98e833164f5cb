"""Adaptive k-Means RSS compression.

All detected RSS values of the training set are flattened into a single 1-D
array and clustered into K centroids (stage 1). Stage 2 re-estimates each
centroid as the mean of its original train members plus the test values that
fall nearest to it. Positioning then runs on data whose RSS values were
replaced by their centroid.

Stage 1 uses an exact dynamic-programming 1-D clustering (minimum SSE), so the
result is deterministic and the reconstruction error is non-increasing in K.
The NOT_DETECTED sentinel is metadata: it is excluded from clustering and MSE
and preserved verbatim through compression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ipsbench.data import Dataset, NOT_DETECTED, Sample
from ipsbench.distances import DistanceSpec
from ipsbench.positioning import KnnPositioner, evaluate
from ipsbench.representation import RssRepresentation

ORIGINAL_BITS = 7


@dataclass
class AkmResult:
    k_clusters: int
    mse_s1: float
    mse_s2: float
    cr: float
    epsilon_3d: float
    centroids_stage1: np.ndarray
    centroids_stage2: np.ndarray
    errors_3d: np.ndarray
    elapsed_seconds: float


def compression_ratio(k_clusters: int, original_bits: int = ORIGINAL_BITS) -> float:
    """Bits of the raw encoding over bits of the compressed encoding."""
    if k_clusters < 2:
        raise ValueError("k_clusters must be >= 2")
    return original_bits / math.ceil(math.log2(k_clusters))


def _detected(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    return values[values != NOT_DETECTED]


def akm_stage1(values: np.ndarray, k_clusters: int) -> np.ndarray:
    """Exact minimum-SSE clustering of the detected values into K groups.

    Returns the strictly increasing centroid list. If the input has fewer
    distinct values than K, the distinct values themselves are returned.
    """
    detected = _detected(values)
    if detected.size == 0:
        raise ValueError("no detected values to cluster")
    xs, weights = np.unique(detected, return_counts=True)
    n = xs.size
    k = min(k_clusters, n)
    if k == n:
        return xs.copy()

    # prefix sums for O(1) weighted segment SSE
    w = np.concatenate([[0.0], np.cumsum(weights)])
    s = np.concatenate([[0.0], np.cumsum(weights * xs)])
    q = np.concatenate([[0.0], np.cumsum(weights * xs * xs)])

    def seg_cost(i: int, j: int) -> float:
        # inclusive segment [i, j]
        cw = w[j + 1] - w[i]
        cs = s[j + 1] - s[i]
        return (q[j + 1] - q[i]) - cs * cs / cw

    prev = np.array([seg_cost(0, m) for m in range(n)])
    splits = np.zeros((k, n), dtype=int)
    for layer in range(1, k):
        cur = np.full(n, np.inf)

        def solve(m_lo: int, m_hi: int, j_lo: int, j_hi: int) -> None:
            # divide & conquer over the monotone argmin of the DP row
            if m_lo > m_hi:
                return
            m = (m_lo + m_hi) // 2
            best, best_j = np.inf, j_lo
            for j in range(max(j_lo, layer), min(j_hi, m) + 1):
                c = prev[j - 1] + seg_cost(j, m)
                if c < best:
                    best, best_j = c, j
            cur[m] = best
            splits[layer, m] = best_j
            solve(m_lo, m - 1, j_lo, best_j)
            solve(m + 1, m_hi, best_j, j_hi)

        solve(layer, n - 1, layer, n - 1)
        prev = cur

    centroids = np.empty(k)
    hi = n - 1
    for layer in range(k - 1, -1, -1):
        lo = splits[layer, hi] if layer > 0 else 0
        cw = w[hi + 1] - w[lo]
        centroids[layer] = (s[hi + 1] - s[lo]) / cw
        hi = lo - 1
    return centroids


def _nearest_centroid_idx(values: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # Centroids are sorted; ties at a midpoint go to the lower centroid.
    mids = (centroids[:-1] + centroids[1:]) / 2.0
    return np.searchsorted(mids, values, side="left")


def akm_reconstruct_mse(values: np.ndarray, centroids: np.ndarray) -> float:
    """Mean squared error of snapping detected values to the nearest centroid."""
    centroids = np.sort(np.asarray(centroids, dtype=float))
    if centroids.size == 0:
        raise ValueError("centroids must be non-empty")
    detected = _detected(values)
    if detected.size == 0:
        return 0.0
    snapped = centroids[_nearest_centroid_idx(detected, centroids)]
    return float(np.mean((detected - snapped) ** 2))


def akm_stage2_adapt(
    centroids_stage1: np.ndarray, train_values: np.ndarray, test_values: np.ndarray
) -> np.ndarray:
    """Single-pass centroid adaptation with the detected test values.

    Each centroid becomes the mean of its train members plus the test values
    nearest to it; a centroid with no members keeps its coordinate. Centroid
    order is preserved.
    """
    centroids = np.asarray(centroids_stage1, dtype=float)
    train = _detected(train_values)
    test = _detected(test_values)
    k = centroids.size
    sums = np.zeros(k)
    counts = np.zeros(k)
    for vals in (train, test):
        if vals.size:
            idx = _nearest_centroid_idx(vals, centroids)
            np.add.at(sums, idx, vals)
            np.add.at(counts, idx, 1.0)
    adapted = centroids.copy()
    nonempty = counts > 0
    adapted[nonempty] = sums[nonempty] / counts[nonempty]
    return adapted


def compress_rss(values: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Replace detected RSS by the nearest centroid, keeping NOT_DETECTED."""
    values = np.asarray(values, dtype=float)
    centroids = np.sort(np.asarray(centroids, dtype=float))
    detected = values != NOT_DETECTED
    out = values.copy()
    out[detected] = centroids[_nearest_centroid_idx(values[detected], centroids)]
    return out


def compress_dataset(dataset: Dataset, centroids: np.ndarray) -> Dataset:
    def compress_samples(samples):
        return [replace(s, fingerprint=compress_rss(s.fingerprint, centroids)) for s in samples]

    return Dataset(
        name=dataset.name,
        ap_count=dataset.ap_count,
        train=compress_samples(dataset.train),
        test=compress_samples(dataset.test),
        min_rss=dataset.min_rss,
    )


def akm_evaluate(
    dataset: Dataset,
    k_clusters: int,
    knn: KnnPositioner | None = None,
    original_bits: int = ORIGINAL_BITS,
) -> AkmResult:
    """Full compression study on one dataset for one K.

    Computes stage-1 and stage-2 reconstruction MSEs of the test RSS, then
    runs the positioner (plain 1-NN by default) on the compressed dataset.
    """
    if k_clusters < 2:
        raise ValueError("k_clusters must be >= 2")
    train_vals = dataset.train_rss()
    test_vals = dataset.test_rss()
    c1 = akm_stage1(train_vals, k_clusters)
    mse_s1 = akm_reconstruct_mse(test_vals, c1)
    c2 = akm_stage2_adapt(c1, train_vals, test_vals)
    mse_s2 = akm_reconstruct_mse(test_vals, c2)
    compressed = compress_dataset(dataset, c2)
    if knn is None:
        knn = KnnPositioner(k=1, representation=RssRepresentation("positive"), distance=DistanceSpec("cityblock"))
    trial = evaluate(compressed, knn)
    return AkmResult(
        k_clusters=k_clusters,
        mse_s1=mse_s1,
        mse_s2=mse_s2,
        cr=compression_ratio(k_clusters, original_bits),
        epsilon_3d=float(trial.errors_3d.mean()),
        centroids_stage1=c1,
        centroids_stage2=np.sort(c2),
        errors_3d=trial.errors_3d,
        elapsed_seconds=trial.elapsed_seconds,
    )
