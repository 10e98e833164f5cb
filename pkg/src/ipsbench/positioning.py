"""k-NN position estimation and per-dataset evaluation.

The estimator follows the fit/predict convention: ``fit`` takes the raw radio
map (RSS matrix plus positions), ``predict`` returns position estimates for
raw query fingerprints. When a clusterer is attached, the search is restricted
to the members of the best-matching cluster.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ipsbench.clustering import ClusteredRadioMap, RadioMapClusterer
from ipsbench.data import Dataset, Position
from ipsbench.distances import DistanceSpec, distance_to_references
from ipsbench.representation import RssRepresentation


@dataclass
class TrialResult:
    """Raw material of one evaluation run over a full test set."""

    errors_3d: np.ndarray  # per-test-sample 3-D error (m)
    floor_hits: np.ndarray | None  # per-test-sample booleans, if floors defined
    elapsed_seconds: float  # wall clock over the whole test sweep
    trial_index: int = 1


class KnnPositioner(BaseEstimator):
    """k-NN position estimator over a (possibly clustered) radio map.

    Parameters
    ----------
    k : number of neighbors; clamped to the available reference count.
    representation : transform applied to raw RSS before distance computation.
    distance : distance/similarity spec used for ranking references.
    clusterer : optional RadioMapClusterer; when set, queries first select the
        cluster whose representative is nearest in representation space, then
        run the k-NN search inside that cluster only.
    """

    def __init__(
        self,
        k: int = 1,
        representation: RssRepresentation | None = None,
        distance: DistanceSpec | None = None,
        clusterer: RadioMapClusterer | None = None,
    ):
        self.k = k
        self.representation = representation
        self.distance = distance
        self.clusterer = clusterer

    def _repr(self) -> RssRepresentation:
        return self.representation if self.representation is not None else RssRepresentation()

    def _dist(self) -> DistanceSpec:
        return self.distance if self.distance is not None else DistanceSpec()

    def fit(self, X, y, floors=None) -> "KnnPositioner":
        """Fit on a raw RSS matrix (n, ap_count) and positions (n, 3)."""
        if self.k < 1:
            raise ValueError("k must be >= 1")
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("empty radio map")
        if y.shape != (X.shape[0], 3):
            raise ValueError("positions must have shape (n_train, 3)")
        self.raw_train_ = X
        self.features_ = self._repr().transform(X)
        self.positions_ = y
        self.floors_ = None if floors is None else np.asarray(floors, dtype=int)
        self.map_: ClusteredRadioMap | None = None
        if self.clusterer is not None:
            self.map_ = self.clusterer.fit(self.features_).clustered_map_
        self.n_distance_evals_ = 0
        return self

    def fit_dataset(self, dataset: Dataset) -> "KnnPositioner":
        floors = (
            np.array([s.position.floor for s in dataset.train])
            if dataset.has_floors
            else None
        )
        return self.fit(dataset.train_rss(), dataset.train_positions(), floors=floors)

    def _check_fitted(self):
        if not hasattr(self, "features_"):
            raise NotFittedError("call fit before predict")

    def _candidate_indices(self, q_feat: np.ndarray) -> np.ndarray | None:
        """Member indices of the best cluster, or None for exhaustive search."""
        if self.map_ is None:
            return None
        spec = self._dist()
        rep_scores = distance_to_references(q_feat, self.map_.representatives, spec)
        self.n_distance_evals_ += self.map_.representatives.shape[0]
        best = int(np.argmin(rep_scores))  # argmin takes the lowest index on ties
        return self.map_.member_indices[best]

    def _estimate_one(self, raw_q: np.ndarray) -> tuple[np.ndarray, int | None]:
        spec = self._dist()
        q_feat = self._repr().transform(raw_q)
        candidates = self._candidate_indices(q_feat)
        pool = self.raw_train_ if spec.uses_raw_fingerprints else self.features_
        qvec = raw_q if spec.uses_raw_fingerprints else q_feat
        refs = pool if candidates is None else pool[candidates]
        scores = distance_to_references(qvec, refs, spec)
        self.n_distance_evals_ += refs.shape[0]
        n_cand = refs.shape[0]
        if self.k == 1:
            # argmin keeps the lowest index on ties, same as the stable sort
            order = np.array([np.argmin(scores)])
        else:
            order = np.argsort(scores, kind="stable")[: min(self.k, n_cand)]
        nearest = order if candidates is None else candidates[order]
        pos = self.positions_[nearest].mean(axis=0)
        floor = None
        if self.floors_ is not None:
            floor = int(self.floors_[nearest[0]])
        return pos, floor

    def predict(self, X) -> np.ndarray:
        """Estimated positions, shape (n_queries, 3)."""
        return self.predict_with_floor(X)[0]

    def predict_with_floor(self, X) -> tuple[np.ndarray, np.ndarray | None]:
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        positions = np.empty((X.shape[0], 3))
        floors = np.empty(X.shape[0], dtype=int) if self.floors_ is not None else None
        for i in range(X.shape[0]):
            pos, floor = self._estimate_one(X[i])
            positions[i] = pos
            if floors is not None:
                floors[i] = floor
        return positions, floors


def knn_estimate(
    query: np.ndarray,
    dataset: Dataset,
    k: int = 1,
    representation: RssRepresentation | None = None,
    distance: DistanceSpec | None = None,
    clusterer: RadioMapClusterer | None = None,
) -> Position:
    """One-shot estimate of a single query fingerprint against a dataset."""
    est = KnnPositioner(
        k=k, representation=representation, distance=distance, clusterer=clusterer
    ).fit_dataset(dataset)
    positions, floors = est.predict_with_floor(np.asarray(query, dtype=float)[None, :])
    floor = None if floors is None else int(floors[0])
    return Position(*positions[0], floor=floor)


def evaluate(dataset: Dataset, positioner: KnnPositioner, trial_index: int = 1) -> TrialResult:
    """Run a positioner over every test sample of a dataset.

    The timed region covers the full test sweep (query transform, search and
    estimation); fitting, including any clustering build, stays outside it.
    """
    positioner.fit_dataset(dataset)
    X_test = dataset.test_rss()
    t0 = time.perf_counter()
    predicted, pred_floors = positioner.predict_with_floor(X_test)
    elapsed = time.perf_counter() - t0
    truth = dataset.test_positions()
    errors = np.linalg.norm(predicted - truth, axis=1)
    floor_hits = None
    if pred_floors is not None and dataset.has_floors:
        true_floors = np.array([s.position.floor for s in dataset.test])
        floor_hits = pred_floors == true_floors
    return TrialResult(
        errors_3d=errors,
        floor_hits=floor_hits,
        elapsed_seconds=elapsed,
        trial_index=trial_index,
    )
