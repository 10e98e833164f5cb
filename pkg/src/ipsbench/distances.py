"""Distance and similarity functions for fingerprint comparison.

All functions return a non-negative score where smaller means more similar.
Similarity-natured members (kulczynski_s, motyka, ruzicka) are returned as a
distance-ordered transform so the same "ascending = nearer" convention holds
everywhere.

Most functions operate on non-negative feature vectors produced by a
representation. The log-Gaussian family (lgd, plgd10, plgd40) instead works on
raw dBm fingerprints: detection is judged on the NOT_DETECTED sentinel and the
Gaussian is evaluated on raw values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ipsbench.data import NOT_DETECTED

MINKOWSKI_RATIO_KINDS = (
    "cityblock",
    "euclidean",
    "sqeuclidean",
    "sorensen",
    "soergel",
    "kulczynski_d",
    "kulczynski_s",
    "motyka",
    "ruzicka",
    "tanimoto",
)
LGD_KINDS = ("lgd", "plgd10", "plgd40")
DISTANCE_KINDS = MINKOWSKI_RATIO_KINDS + ("neyman",) + LGD_KINDS

#: Distances whose reference rankings coincide for strictly positive vectors.
SORENSEN_RANK_FAMILY = (
    "sorensen",
    "soergel",
    "kulczynski_d",
    "kulczynski_s",
    "motyka",
    "ruzicka",
    "tanimoto",
)


@dataclass(frozen=True)
class DistanceSpec:
    kind: str = "cityblock"
    sigma: float = 6.0  # dB, log-Gaussian family
    epsilon_guard: float = 1e-12

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance {self.kind!r}; expected one of {DISTANCE_KINDS}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.epsilon_guard <= 0:
            raise ValueError("epsilon_guard must be positive")

    @property
    def penalty(self) -> float:
        """Per-AP penalty for single-sided detections (log-Gaussian family)."""
        return {"plgd10": 10.0, "plgd40": 40.0}.get(self.kind, 0.0)

    @property
    def uses_raw_fingerprints(self) -> bool:
        return self.kind in LGD_KINDS


def _lgd_scores(q: np.ndarray, refs: np.ndarray, spec: DistanceSpec) -> np.ndarray:
    q_det = q != NOT_DETECTED
    r_det = refs != NOT_DETECTED
    both = q_det[None, :] & r_det
    diff = np.where(both, refs - q[None, :], 0.0)
    norm = 1.0 / (spec.sigma * math.sqrt(2.0 * math.pi))
    phi = norm * np.exp(-(diff**2) / (2.0 * spec.sigma**2))
    scores = -np.sum(np.where(both, np.log(phi + spec.epsilon_guard), 0.0), axis=1)
    if spec.penalty > 0:
        single = q_det[None, :] ^ r_det
        scores = scores + spec.penalty * np.sum(single, axis=1)
    return scores


def distance_to_references(
    query: np.ndarray, references: np.ndarray, spec: DistanceSpec
) -> np.ndarray:
    """Vectorized scores of one query against every row of a reference matrix."""
    q = np.asarray(query, dtype=float)
    refs = np.atleast_2d(np.asarray(references, dtype=float))
    if refs.shape[0] == 0:
        raise ValueError("empty reference matrix")
    if refs.shape[1] != q.shape[0]:
        raise ValueError(
            f"dimension mismatch: query has {q.shape[0]} slots, references have {refs.shape[1]}"
        )
    eps = spec.epsilon_guard
    kind = spec.kind

    if kind in LGD_KINDS:
        return _lgd_scores(q, refs, spec)

    if kind == "cityblock":
        return np.abs(refs - q).sum(axis=1)
    if kind == "euclidean":
        return np.sqrt(((refs - q) ** 2).sum(axis=1))
    if kind == "sqeuclidean":
        return ((refs - q) ** 2).sum(axis=1)
    if kind == "neyman":
        # Query slots act as denominators; near-zero slots are skipped.
        mask = q >= eps
        diff2 = (refs[:, mask] - q[mask]) ** 2
        return (diff2 / q[mask]).sum(axis=1)

    abs_diff = np.abs(refs - q).sum(axis=1)
    if kind == "sorensen":
        return abs_diff / ((refs + q).sum(axis=1) + eps)
    sum_min = np.minimum(refs, q).sum(axis=1)
    sum_max = np.maximum(refs, q).sum(axis=1)
    if kind == "soergel":
        return abs_diff / (sum_max + eps)
    if kind in ("kulczynski_d", "kulczynski_s"):
        # kulczynski_s is the reciprocal of the Kulczynski similarity, which
        # coincides with kulczynski_d after the guard.
        return abs_diff / (sum_min + eps)
    if kind == "motyka":
        return sum_max / ((refs + q).sum(axis=1) + eps)
    if kind == "ruzicka":
        return 1.0 - sum_min / (sum_max + eps)
    if kind == "tanimoto":
        return (sum_max - sum_min) / (sum_max + eps)
    raise AssertionError(f"unhandled distance {kind!r}")


def distance(u: np.ndarray, v: np.ndarray, spec: DistanceSpec) -> float:
    """Score between two vectors (lower = more similar)."""
    return float(distance_to_references(u, np.asarray(v, dtype=float)[None, :], spec)[0])


def rank_references(
    query: np.ndarray, references: np.ndarray, spec: DistanceSpec
) -> np.ndarray:
    """Indices of the reference rows ordered by ascending score.

    Ties are broken by ascending reference index, so the order is a
    deterministic total order.
    """
    scores = distance_to_references(query, references, spec)
    return np.argsort(scores, kind="stable")
