import itertools

import numpy as np
import pytest

from ipsbench.akm import (
    akm_evaluate,
    akm_reconstruct_mse,
    akm_stage1,
    akm_stage2_adapt,
    compress_dataset,
    compress_rss,
    compression_ratio,
)
from ipsbench.data import NOT_DETECTED


def brute_force_1d_sse(values, k):
    """Best SSE over all contiguous partitions of the sorted values."""
    xs = np.sort(np.asarray(values, dtype=float))
    n = len(xs)
    best = np.inf
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        sse = 0.0
        for lo, hi in zip(bounds, bounds[1:]):
            seg = xs[lo:hi]
            sse += float(((seg - seg.mean()) ** 2).sum())
        best = min(best, sse)
    return best


def clustering_sse(values, centroids):
    values = np.asarray(values, dtype=float)
    nearest = centroids[np.argmin(np.abs(values[:, None] - centroids[None, :]), axis=1)]
    return float(((values - nearest) ** 2).sum())


class TestStage1:
    def test_two_pairs(self):
        assert np.allclose(akm_stage1(np.array([1.0, 2.0, 9.0, 10.0]), 2), [1.5, 9.5])

    def test_weighted_duplicates(self):
        # duplicates shift the segment mean toward the heavy value
        c = akm_stage1(np.array([0.0, 0.0, 0.0, 3.0, 80.0]), 2)
        assert np.allclose(c, [0.75, 80.0])

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_matches_exhaustive_oracle(self, k):
        rng = np.random.default_rng(k)
        for _ in range(20):
            values = rng.uniform(-100.0, -30.0, size=9)
            centroids = akm_stage1(values, k)
            assert clustering_sse(values, centroids) == pytest.approx(
                brute_force_1d_sse(values, k), abs=1e-9
            )

    def test_centroids_strictly_increasing(self):
        rng = np.random.default_rng(0)
        values = rng.integers(-100, -30, size=400).astype(float)
        for k in (2, 5, 16):
            c = akm_stage1(values, k)
            assert np.all(np.diff(c) > 0)

    def test_fewer_distinct_values_than_k(self):
        c = akm_stage1(np.array([-60.0, -60.0, -50.0]), 8)
        assert np.allclose(c, [-60.0, -50.0])

    def test_sentinel_excluded(self):
        with_sentinel = np.array([-60.0, NOT_DETECTED, -50.0, NOT_DETECTED])
        assert np.allclose(akm_stage1(with_sentinel, 2), [-60.0, -50.0])

    def test_all_sentinel_rejected(self):
        with pytest.raises(ValueError, match="no detected values"):
            akm_stage1(np.full(4, NOT_DETECTED), 2)


class TestReconstructionMse:
    def test_direct_example(self):
        centroids = np.array([0.0, 10.0])
        values = np.array([1.0, 9.0, NOT_DETECTED])
        # errors 1 and 1 over two detected values
        assert akm_reconstruct_mse(values, centroids) == pytest.approx(1.0)

    def test_non_increasing_in_k(self, small_dataset):
        train = small_dataset.train_rss()
        test = small_dataset.test_rss()
        mses = [
            akm_reconstruct_mse(test, akm_stage1(train, k)) for k in (2, 4, 7, 15, 25)
        ]
        assert all(a >= b - 1e-9 for a, b in zip(mses, mses[1:]))

    def test_exact_centroids_give_zero(self):
        values = np.array([-70.0, -50.0, -70.0])
        assert akm_reconstruct_mse(values, np.array([-70.0, -50.0])) == 0.0


class TestStage2:
    def test_means_of_assigned_values(self):
        c1 = np.array([0.0, 10.0])
        train = np.array([1.0, -1.0, 11.0])
        test = np.array([2.0, 12.0])
        # low cluster gets {1,-1,2} -> 2/3, high gets {11,12} -> 11.5
        c2 = akm_stage2_adapt(c1, train, test)
        assert np.allclose(c2, [2.0 / 3.0, 11.5])

    def test_empty_centroid_keeps_coordinate(self):
        c2 = akm_stage2_adapt(np.array([0.0, 100.0 - 1e-6]), np.array([1.0]), np.array([2.0]))
        assert c2[1] == pytest.approx(100.0 - 1e-6)

    def test_stage2_does_not_hurt_on_test_values(self, small_dataset):
        train = small_dataset.train_rss()
        test = small_dataset.test_rss()
        c1 = akm_stage1(train, 7)
        c2 = akm_stage2_adapt(c1, train, test)
        assert akm_reconstruct_mse(test, c2) <= akm_reconstruct_mse(test, c1) * 1.5


class TestCompression:
    def test_sentinel_preserved(self):
        values = np.array([-60.0, NOT_DETECTED, -52.0])
        out = compress_rss(values, np.array([-60.0, -50.0]))
        assert out[1] == NOT_DETECTED
        assert np.allclose(out, [-60.0, NOT_DETECTED, -50.0])

    def test_dataset_positions_untouched(self, small_dataset):
        compressed = compress_dataset(small_dataset, np.array([-90.0, -60.0, -40.0]))
        assert np.array_equal(
            compressed.train_positions(), small_dataset.train_positions()
        )
        alphabet = {-90.0, -60.0, -40.0, NOT_DETECTED}
        assert set(np.unique(compressed.train_rss())) <= alphabet


class TestCompressionRatio:
    def test_closed_form(self):
        assert compression_ratio(2) == 7.0
        assert compression_ratio(4) == 3.5
        assert compression_ratio(7) == pytest.approx(7 / 3)
        assert compression_ratio(15) == 1.75
        assert compression_ratio(25) == 1.4
        assert compression_ratio(35) == pytest.approx(7 / 6)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            compression_ratio(1)


class TestAkmEvaluate:
    def test_result_fields(self, small_dataset):
        res = akm_evaluate(small_dataset, 4)
        assert res.k_clusters == 4
        assert res.cr == 3.5
        assert res.mse_s1 >= 0 and res.mse_s2 >= 0
        assert len(res.centroids_stage1) <= 4
        assert len(res.errors_3d) == len(small_dataset.test)
        assert res.epsilon_3d == pytest.approx(float(res.errors_3d.mean()))

    def test_deterministic(self, small_dataset):
        a = akm_evaluate(small_dataset, 7)
        b = akm_evaluate(small_dataset, 7)
        assert np.array_equal(a.errors_3d, b.errors_3d)
        assert a.mse_s2 == b.mse_s2
