"""Robust sphericity tests built on the sample SSCM spectrum."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import NumericError, UnsupportedConfigError
from .sign_geometry import SscmMatrix


@dataclass(frozen=True)
class TestReport:
    test: str  # "frobenius" or "kl"
    statistic: float
    p_value: float
    raw: float
    kappa: float
    c_n: float
    r_w_used: float
    r_w_source: str

    def to_json(self):
        return json.dumps(
            {
                "test": self.test,
                "statistic": self.statistic,
                "p_value": self.p_value,
                "raw": self.raw,
                "kappa": self.kappa,
                "c_n": self.c_n,
                "r_w_used": self.r_w_used,
                "r_w_source": self.r_w_source,
            }
        )


def _unwrap(B):
    if isinstance(B, SscmMatrix):
        return B.matrix
    return np.asarray(B, dtype=float)


def frobenius_sphericity_test(B, n, r_w, r_w_source="supplied"):
    """Squared-Frobenius sphericity statistic, standard normal under the null.

    Rejects two-sided: the centering can be undershot in finite samples.
    """
    M = _unwrap(B)
    p = M.shape[0]
    c_n = p / n
    kappa1 = c_n * (r_w**2 - 2.0 * r_w + 2.0)
    raw = float(np.sum(M * M))  # tr(B^2)
    stat = (raw - p * (1.0 + c_n) - c_n * (kappa1 - 1.0)) / (2.0 * c_n)
    p_value = 2.0 * (1.0 - norm.cdf(abs(stat)))
    return TestReport(
        test="frobenius",
        statistic=float(stat),
        p_value=float(p_value),
        raw=raw,
        kappa=float(kappa1),
        c_n=c_n,
        r_w_used=float(r_w),
        r_w_source=r_w_source,
    )


def kl_sphericity_test(B, n, r_w, r_w_source="supplied"):
    """Likelihood-shaped (KL divergence) sphericity statistic; needs p < n.

    Rejects upper one-sided: the divergence grows under any alternative.
    """
    M = _unwrap(B)
    p = M.shape[0]
    if p >= n:
        raise UnsupportedConfigError("KL sphericity test requires p < n")
    c_n = p / n
    if c_n < 1e-3:
        raise NumericError("variance term degenerates for c_n below 1e-3")
    eigs = np.linalg.eigvalsh(M)
    if np.min(eigs) <= 1e-12:
        raise ValueError("B must be nonsingular for the KL statistic")
    kappa2 = (
        c_n * (r_w - 2.0)
        - np.log(1.0 - c_n)
        - np.log(1.0 + c_n * (r_w - 1.0))
    )
    raw = float(np.sum(eigs) - np.sum(np.log(eigs)))
    num = (
        raw
        - 2.0 * p
        + (p - n + 0.5) * np.log(1.0 - c_n)
        - kappa2
        + c_n
    )
    den = np.sqrt(-2.0 * np.log(1.0 - c_n) - 2.0 * c_n)
    stat = num / den
    p_value = 1.0 - norm.cdf(stat)
    return TestReport(
        test="kl",
        statistic=float(stat),
        p_value=float(p_value),
        raw=raw,
        kappa=float(kappa2),
        c_n=c_n,
        r_w_used=float(r_w),
        r_w_source=r_w_source,
    )
