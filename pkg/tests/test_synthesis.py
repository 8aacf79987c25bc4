import numpy as np
import pytest

from oracles import ari_pairs
from scsar.errors import LengthMismatch, SpatialParamOutOfRange
from scsar.likelihood import Family
from scsar.synthesis import (
    ClusterParams,
    SyntheticSpec,
    adjusted_rand_index,
    band_partition,
    generate,
    score_recovery,
)
from scsar.weights import SpatialWeights, lattice_weights, restrict

BANDS = [
    ClusterParams((2.0, -1.0), 0.03, 0.5),
    ClusterParams((-1.0, 3.0), 0.00, 0.5),
    ClusterParams((0.0, 1.0), 0.05, 0.5),
]


class TestGenerate:
    def test_zero_spatial_is_linear(self):
        params = [ClusterParams(cp.theta, 0.0, cp.sigma) for cp in BANDS]
        s = generate(SyntheticSpec(params, seed=5))
        theta = np.array([params[k].theta for k in s.truth])
        np.testing.assert_array_equal(s.dataset.y, np.einsum("ij,ij->i", s.dataset.X, theta) + s.noise)

    def test_vanishing_noise(self):
        y = generate(SyntheticSpec([ClusterParams((0.0, 0.0), 0.1, 1e-12)], shape=(6, 6))).dataset.y
        assert np.max(np.abs(y)) < 1e-10

    def test_residual_reconstruction(self):
        s = generate(SyntheticSpec([ClusterParams((2.0, -1.0), 0.05, 0.5)], shape=(10, 10), seed=2))
        ds, w = s.dataset, s.weights
        e = ds.y - 0.05 * w.lag(ds.y) - ds.X @ [2.0, -1.0]
        np.testing.assert_allclose(e, s.noise, atol=1e-10)

    def test_sem_reconstruction(self):
        s = generate(SyntheticSpec([ClusterParams((1.0, 1.0), 0.1, 0.5)], family=Family.SEM, shape=(8, 8)))
        ds, w = s.dataset, s.weights
        u = ds.y - ds.X @ [1.0, 1.0]
        np.testing.assert_allclose(u - 0.1 * w.lag(u), s.noise, atol=1e-10)

    def test_slx_reconstruction(self):
        cp = ClusterParams((1.0, 2.0), sigma=0.5, lag_theta=(0.5,))
        s = generate(SyntheticSpec([cp], family=Family.SLX, shape=(8, 8)))
        ds, w = s.dataset, s.weights
        e = ds.y - ds.X @ [1.0, 2.0] - 0.5 * w.lag(ds.X[:, 1])
        np.testing.assert_allclose(e, s.noise, atol=1e-12)

    def test_cross_cluster_edges_carry_nothing(self):
        s = generate(SyntheticSpec(BANDS, seed=11))
        w = s.weights
        kept = [(i, j) for i, j in w.edge_set() if s.truth[i] == s.truth[j]]
        cut = SpatialWeights(w.n, kept)
        t = generate(
            SyntheticSpec(BANDS, weights=cut, coords=s.dataset.coords, partition=s.truth, seed=11)
        )
        np.testing.assert_array_equal(t.dataset.y, s.dataset.y)
        np.testing.assert_array_equal(t.noise, s.noise)

    def test_uses_restricted_weights(self):
        s = generate(SyntheticSpec(BANDS, seed=1))
        for k, cp in enumerate(BANDS):
            m = np.flatnonzero(s.truth == k)
            wk = restrict(s.weights, m)
            y = s.dataset.y[m]
            e = y - cp.spatial_param * wk.lag(y) - s.dataset.X[m] @ np.asarray(cp.theta)
            np.testing.assert_allclose(e, s.noise[m], atol=1e-10)

    def test_deterministic(self):
        a = generate(SyntheticSpec(BANDS, seed=3))
        b = generate(SyntheticSpec(BANDS, seed=3))
        np.testing.assert_array_equal(a.dataset.y, b.dataset.y)
        np.testing.assert_array_equal(a.dataset.X, b.dataset.X)
        c = generate(SyntheticSpec(BANDS, seed=4))
        assert not np.array_equal(a.dataset.y, c.dataset.y)

    def test_out_of_range(self):
        with pytest.raises(SpatialParamOutOfRange):
            generate(SyntheticSpec([ClusterParams((1.0,), 0.5, 1.0)], shape=(5, 5)))

    def test_bands(self):
        b = band_partition(4, 6, 3)
        np.testing.assert_array_equal(b[:6], [0, 0, 1, 1, 2, 2])
        assert np.bincount(b).tolist() == [8, 8, 8]
        # every band is contiguous under rook adjacency
        w = lattice_weights(4, 6)
        for k in range(3):
            sub = restrict(w, np.flatnonzero(b == k))
            assert sub.n_edges == 4 * 1 + 3 * 2


class TestAri:
    def test_identical(self):
        assert adjusted_rand_index([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == 1.0

    def test_permuted(self):
        assert score_recovery([0, 0, 1, 1, 2], [2, 2, 0, 0, 1]) == 1.0

    def test_halves_vs_single(self):
        truth = np.repeat([0, 1], 50)
        est = np.zeros(100, int)
        got = adjusted_rand_index(truth, est)
        assert got == pytest.approx(ari_pairs(truth, est), abs=1e-12)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_pair_counting(self, rng):
        for _ in range(20):
            a = rng.integers(0, 4, 40)
            b = rng.integers(0, 3, 40)
            assert adjusted_rand_index(a, b) == pytest.approx(ari_pairs(a, b), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            adjusted_rand_index([0, 1], [0, 1, 1])
