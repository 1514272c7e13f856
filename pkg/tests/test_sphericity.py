"""Tests for the two robust sphericity tests."""

import json

import numpy as np
import pytest

from sscm.errors import NumericError, UnsupportedConfigError
from sscm.sign_geometry import sscm
from sscm.sphericity import frobenius_sphericity_test, kl_sphericity_test


def null_sscm(p, n, seed):
    rng = np.random.default_rng(seed)
    return sscm(rng.standard_normal((n, p)), center=np.zeros(p))


class TestFrobenius:
    def test_statistic_arithmetic(self):
        # hand-built B: statistic follows directly from tr(B^2)
        p, n = 4, 8
        B = np.eye(p)
        c_n = p / n
        report = frobenius_sphericity_test(B, n, r_w=1.0)
        kappa1 = c_n * (1 - 2 + 2)
        expected = (p - p * (1 + c_n) - c_n * (kappa1 - 1)) / (2 * c_n)
        assert report.statistic == pytest.approx(expected)
        assert report.kappa == pytest.approx(kappa1)

    def test_null_yields_moderate_statistic(self):
        report = frobenius_sphericity_test(null_sscm(100, 50, 0), 50, r_w=1.0)
        assert abs(report.statistic) < 4.0
        assert 0.0 <= report.p_value <= 1.0

    def test_power_direction(self):
        # two-level shape inflates tr(B^2) and the statistic
        rng = np.random.default_rng(1)
        t = np.concatenate([np.full(50, 0.5), np.full(50, 1.5)])
        stats_alt, stats_null = [], []
        for _ in range(20):
            X = rng.standard_normal((100, 100))
            stats_null.append(
                frobenius_sphericity_test(sscm(X, center=np.zeros(100)), 100, 1.0).statistic
            )
            Xa = X * np.sqrt(t)
            stats_alt.append(
                frobenius_sphericity_test(sscm(Xa, center=np.zeros(100)), 100, 1.0).statistic
            )
        assert np.mean(stats_alt) > np.mean(stats_null) + 5

    def test_report_json(self):
        report = frobenius_sphericity_test(null_sscm(20, 40, 2), 40, r_w=1.0)
        data = json.loads(report.to_json())
        assert data["test"] == "frobenius"
        assert set(data) >= {"statistic", "p_value", "kappa", "c_n"}


class TestKl:
    def test_requires_p_less_than_n(self):
        with pytest.raises(UnsupportedConfigError):
            kl_sphericity_test(null_sscm(60, 40, 3), 40, r_w=1.0)

    def test_rejects_vanishing_ratio(self):
        with pytest.raises(NumericError):
            kl_sphericity_test(np.eye(1), 100000, r_w=1.0)

    def test_kappa_value(self):
        # r_w = 1, c_n = 0.5: kappa_2 = -0.5 - log(0.5) ~ 0.19315
        report = kl_sphericity_test(null_sscm(50, 100, 4), 100, r_w=1.0)
        expected = 0.5 * (1 - 2) - np.log(0.5)
        assert report.kappa == pytest.approx(expected)
        assert report.kappa == pytest.approx(0.19315, abs=1e-4)

    def test_null_yields_moderate_statistic(self):
        report = kl_sphericity_test(null_sscm(50, 200, 5), 200, r_w=1.0)
        assert abs(report.statistic) < 4.0

    def test_singular_matrix_rejected(self):
        B = np.zeros((4, 4))
        B[0, 0] = 4.0
        with pytest.raises(ValueError):
            kl_sphericity_test(B, 8, r_w=1.0)

    def test_one_sided_p_value(self):
        report = kl_sphericity_test(null_sscm(30, 120, 6), 120, r_w=1.0)
        from scipy.stats import norm

        assert report.p_value == pytest.approx(1 - norm.cdf(report.statistic))
