"""Tests for spatial signs, the spatial median, and the sample SSCM."""

import numpy as np
import pytest
from scipy.optimize import minimize

from sscm.sign_geometry import (
    SampleBatch,
    estimate_rw,
    spatial_median,
    spatial_sign,
    spatial_signs,
    sscm,
)


class TestSpatialSign:
    def test_unit_norm(self):
        s = spatial_sign(np.array([3.0, 4.0]))
        np.testing.assert_allclose(s, [0.6, 0.8])

    def test_zero_vector_maps_to_zero(self):
        np.testing.assert_array_equal(spatial_sign(np.zeros(3)), np.zeros(3))

    def test_rowwise(self):
        X = np.array([[1.0, 0.0], [0.0, -2.0], [0.0, 0.0]])
        S = spatial_signs(X)
        np.testing.assert_allclose(S, [[1, 0], [0, -1], [0, 0]])


class TestSpatialMedian:
    def test_against_generic_optimizer(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((60, 4)) + 0.5
        res = spatial_median(X)
        obj = lambda mu: np.sum(np.linalg.norm(X - mu, axis=1))
        direct = minimize(obj, X.mean(axis=0), method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        assert np.linalg.norm(res.median - direct.x) < 1e-5
        assert obj(res.median) <= direct.fun + 1e-8

    def test_residual_tolerance(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((200, 10))
        res = spatial_median(X)
        # sum of spatial signs around the median nearly cancels
        assert res.residual_norm < 1e-8

    def test_orthogonal_equivariance(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((80, 5))
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        mu = spatial_median(X).median
        mu_rot = spatial_median(X @ Q.T).median
        assert np.linalg.norm(mu_rot - Q @ mu) < 1e-8

    def test_translation_equivariance(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((50, 3))
        shift = np.array([10.0, -4.0, 2.5])
        mu = spatial_median(X).median
        assert np.linalg.norm(spatial_median(X + shift).median - (mu + shift)) < 1e-8

    def test_data_point_minimizer(self):
        # one point heavily replicated: the median sits on it
        X = np.vstack([np.zeros((10, 2)), np.ones((2, 2)), -np.ones((2, 2))])
        res = spatial_median(X)
        assert np.linalg.norm(res.median) < 1e-8

    def test_consistency_rate(self):
        # the residual-corrected expansion: error shrinks with n (seed-averaged)
        errs = []
        for n in (100, 400, 1600):
            tot = 0.0
            for seed in range(5):
                rng = np.random.default_rng(seed)
                X = rng.exponential(1.0, size=(n, 30)) - 1.0
                mu_hat = spatial_median(X).median
                s = spatial_signs(X)
                inv = 1.0 / np.linalg.norm(X, axis=1)
                correction = s.sum(axis=0) / inv.sum()
                tot += np.linalg.norm(mu_hat - correction)
            errs.append(tot / 5)
        assert errs[0] > errs[1] > errs[2]


class TestSscm:
    def test_trace_is_p(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((100, 20))
        B = sscm(X).matrix
        assert abs(np.trace(B) - 20) < 1e-10

    def test_known_center(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((50, 6))
        B = sscm(X, center=np.zeros(6)).matrix
        S = spatial_signs(X)
        expected = (6 / 50) * S.T @ S
        np.testing.assert_allclose(B, expected, atol=1e-12)

    def test_orthogonal_equivariance(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((80, 7))
        Q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
        B = sscm(X).matrix
        B_rot = sscm(X @ Q.T).matrix
        assert np.linalg.norm(B_rot - Q @ B @ Q.T) < 1e-8

    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((60, 5))
        B1 = sscm(X, center=np.zeros(5)).matrix
        B2 = sscm(17.5 * X, center=np.zeros(5)).matrix
        np.testing.assert_allclose(B1, B2, atol=1e-12)

    def test_degenerate_rows_dropped(self):
        X = np.vstack([np.eye(3), np.zeros((1, 3))])
        result = sscm(X, center=np.zeros(3))
        assert result.degenerate_rows == 1
        assert abs(np.trace(result.matrix) - 3) < 1e-12


class TestSampleBatch:
    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((10, 3))
        path = tmp_path / "sample.csv"
        SampleBatch(X).to_csv(path)
        back = SampleBatch.from_csv(path)
        np.testing.assert_array_equal(back.data, X)

    def test_shape_properties(self):
        b = SampleBatch(np.zeros((7, 2)))
        assert (b.n, b.p) == (7, 2)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            SampleBatch(np.zeros((3,)))
        with pytest.raises(ValueError):
            SampleBatch(np.array([[np.nan, 1.0]]))


class TestEstimateRw:
    def test_constant_weight(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((500, 100))
        assert abs(estimate_rw(X, np.zeros(100)) - 1.0) < 0.05

    def test_two_point_weight(self):
        from sscm.simulation import ModelSpec, generate_sample

        X = generate_sample(ModelSpec("M2", p=400, n=800, seed=10)).data
        assert abs(estimate_rw(X, np.zeros(400)) - 13.0 / 9.0) < 0.1

    def test_beta_weight(self):
        from sscm.simulation import ModelSpec, generate_sample

        X = generate_sample(ModelSpec("M3", p=400, n=400, seed=11)).data
        assert abs(estimate_rw(X, np.zeros(400)) - 1.2) < 0.1
