import numpy as np
import pytest

from ipsbench.clustering import RadioMapClusterer
from ipsbench.data import Dataset, Position, Sample
from ipsbench.distances import SORENSEN_RANK_FAMILY, DistanceSpec
from ipsbench.positioning import KnnPositioner, evaluate, knn_estimate
from ipsbench.representation import RssRepresentation


def toy_dataset():
    rss = np.array(
        [
            [-50.0, -60.0, -70.0],
            [-80.0, -55.0, -65.0],
            [-60.0, -75.0, -50.0],
            [-90.0, -85.0, -40.0],
        ]
    )
    positions = [(0, 0, 0), (2, 0, 0), (0, 4, 0), (6, 6, 0)]
    train = [Sample(rss[i], Position(*positions[i], floor=0)) for i in range(4)]
    test = [Sample(rss[0], Position(0, 0, 0, floor=0))]
    return Dataset("toy", 3, train, test)


def brute_force_1nn(query_feat, ref_feats, positions):
    best, best_d = 0, np.inf
    for i in range(ref_feats.shape[0]):
        d = float(np.abs(ref_feats[i] - query_feat).sum())
        if d < best_d:
            best, best_d = i, d
    return positions[best]


def test_exact_match_wins():
    ds = toy_dataset()
    est = knn_estimate(ds.train[1].fingerprint, ds, k=1)
    assert (est.x, est.y, est.z) == (2, 0, 0)


def test_k2_centroid():
    ds = toy_dataset()
    est = knn_estimate(ds.train[0].fingerprint, ds, k=2)
    # nearest two are the query itself at (0,0,0) and (2,0,0)
    assert (est.x, est.y, est.z) == (1, 0, 0)


def test_floor_from_nearest_neighbor(multifloor_dataset):
    est = KnnPositioner(k=5).fit_dataset(multifloor_dataset)
    _, floors = est.predict_with_floor(multifloor_dataset.test_rss())
    assert floors is not None
    assert set(floors) <= {s.position.floor for s in multifloor_dataset.train}


def test_k_clamped_to_train_size():
    ds = toy_dataset()
    est = knn_estimate(ds.train[0].fingerprint, ds, k=50)
    centroid = np.mean([[0, 0, 0], [2, 0, 0], [0, 4, 0], [6, 6, 0]], axis=0)
    assert np.allclose([est.x, est.y, est.z], centroid)


def test_matches_brute_force_oracle(small_dataset):
    rep = RssRepresentation("positive")
    est = KnnPositioner(k=1, representation=rep, distance=DistanceSpec("cityblock"))
    est.fit_dataset(small_dataset)
    ref_feats = rep.transform(small_dataset.train_rss())
    train_pos = small_dataset.train_positions()
    predicted = est.predict(small_dataset.test_rss())
    for i, s in enumerate(small_dataset.test):
        expected = brute_force_1nn(rep.transform(s.fingerprint), ref_feats, train_pos)
        assert np.allclose(predicted[i], expected)


def test_unfitted_predict_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        KnnPositioner().predict(np.zeros((1, 3)))


def test_empty_radio_map_rejected():
    with pytest.raises(ValueError, match="empty radio map"):
        KnnPositioner().fit(np.empty((0, 3)), np.empty((0, 3)))


class TestClusteredSearch:
    def test_single_cluster_matches_plain(self, small_dataset):
        plain = KnnPositioner(k=3).fit_dataset(small_dataset)
        clustered = KnnPositioner(
            k=3, clusterer=RadioMapClusterer(algo="kmeans", count_rule=1, seed=0)
        ).fit_dataset(small_dataset)
        X = small_dataset.test_rss()
        assert np.array_equal(plain.predict(X), clustered.predict(X))

    def test_search_restricted_to_cluster(self, small_dataset):
        est = KnnPositioner(
            k=1, clusterer=RadioMapClusterer(algo="kmeans", count_rule=4, seed=1)
        ).fit_dataset(small_dataset)
        cmap = est.map_
        q = small_dataset.test[0].fingerprint
        est.n_distance_evals_ = 0
        est.predict(q[None, :])
        budget = cmap.n_clusters + max(len(m) for m in cmap.member_indices)
        assert est.n_distance_evals_ <= budget

    def test_member_query_resolves_within_its_cluster(self, small_dataset):
        est = KnnPositioner(
            k=1, clusterer=RadioMapClusterer(algo="kmeans", count_rule=3, seed=2)
        ).fit_dataset(small_dataset)
        q = small_dataset.train[5].fingerprint
        pred = est.predict(q[None, :])[0]
        assert np.allclose(pred, small_dataset.train[5].position.as_array())


class TestEvaluate:
    def test_shapes_and_timing(self, small_dataset):
        result = evaluate(small_dataset, KnnPositioner(k=1), trial_index=3)
        assert len(result.errors_3d) == len(small_dataset.test)
        assert result.elapsed_seconds >= 0
        assert result.trial_index == 3
        assert result.floor_hits is not None

    def test_exact_training_match_gives_zero_error(self):
        ds = toy_dataset()
        result = evaluate(ds, KnnPositioner(k=1))
        assert result.errors_3d[0] == 0.0

    def test_deterministic_across_trials(self, small_dataset):
        a = evaluate(small_dataset, KnnPositioner(k=1), 1)
        b = evaluate(small_dataset, KnnPositioner(k=1), 2)
        assert np.array_equal(a.errors_3d, b.errors_3d)

    def test_sorensen_family_same_errors(self, small_dataset):
        # threshold far below any synthetic RSS: every slot detected, so the
        # represented vectors are strictly positive and the family coincides
        errors = []
        for kind in SORENSEN_RANK_FAMILY:
            est = KnnPositioner(k=3, distance=DistanceSpec(kind))
            errors.append(evaluate(small_dataset, est).errors_3d)
        for other in errors[1:]:
            assert np.array_equal(errors[0], other)

    def test_euclidean_pair_same_errors(self, small_dataset):
        a = evaluate(small_dataset, KnnPositioner(k=4, distance=DistanceSpec("euclidean")))
        b = evaluate(small_dataset, KnnPositioner(k=4, distance=DistanceSpec("sqeuclidean")))
        assert np.array_equal(a.errors_3d, b.errors_3d)
