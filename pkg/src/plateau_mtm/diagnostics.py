"""Chain performance metrics: integrated autocorrelation time (initial
monotone sequence estimator), average squared jump distance, running
coverage of confidence regions, first hitting times, and the chi-square
quantile these need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammainccinv

__all__ = [
    "MetricRecord",
    "chisq_quantile",
    "chisq_log_pdf",
    "act_initial_sequence",
    "asjd",
    "running_coverage_component",
    "running_coverage_joint",
    "first_hitting_time",
]


@dataclass(frozen=True)
class MetricRecord:
    """One metric value for one repetition.

    component is 1-based, or None for joint / scalar metrics; n is the
    iteration index where applicable (final index for coverage); value is
    None for an absent hitting time.
    """

    repetition: int
    metric: str
    component: Optional[int]
    n: Optional[int]
    value: Optional[float]


def chisq_quantile(p: float, df: int) -> float:
    """The p-quantile of chi-square with df degrees of freedom.

    Returns z with P(Z <= z) = p, computed by inverting the regularised
    incomplete gamma function, so e.g. (0.99, 1) -> 6.6349.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if df < 1:
        raise ValueError("df must be a positive integer")
    return float(2.0 * gammainccinv(df / 2.0, 1.0 - p))


def chisq_log_pdf(z: float, df: int) -> float:
    """Log density of chi-square with df degrees of freedom (z > 0)."""
    if z <= 0:
        return float("-inf")
    half = df / 2.0
    return (half - 1.0) * math.log(z) - z / 2.0 - half * math.log(2.0) - math.lgamma(half)


def _autocovariances(series: np.ndarray) -> np.ndarray:
    """Biased empirical autocovariances gamma_0..gamma_{n-1} via FFT."""
    n = len(series)
    centered = series - series.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:n].real
    return acov / n


def act_initial_sequence(series: np.ndarray, variance: Optional[float] = None) -> float:
    """Integrated autocorrelation time by the initial monotone sequence rule.

    Adjacent-lag autocovariances are paired into Gamma_m = gamma_{2m} +
    gamma_{2m+1}; the sum is truncated at the first non-positive pair and
    the retained pairs are forced non-increasing. The result is
    (-gamma_0 + 2 * sum Gamma_m) / v with v the supplied true variance, or
    gamma_0 when none is given (which makes the estimate scale invariant).
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be one dimensional")
    if len(series) < 10:
        raise ValueError("series too short (need at least 10 points)")
    if variance is not None and variance <= 0:
        raise ValueError("variance must be positive")
    acov = _autocovariances(series)
    gamma0 = acov[0]
    if gamma0 == 0.0:
        raise ValueError("degenerate series: zero variance")

    total = 0.0
    prev = math.inf
    for m in range(len(acov) // 2):
        pair = acov[2 * m] + acov[2 * m + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)
        total += pair
        prev = pair
    v = variance if variance is not None else gamma0
    return float((-gamma0 + 2.0 * total) / v)


def asjd(series: np.ndarray) -> float:
    """Average squared jump distance: mean of squared successive differences."""
    series = np.asarray(series, dtype=float)
    if len(series) < 2:
        raise ValueError("series must have at least 2 points")
    diffs = np.diff(series)
    return float(np.mean(diffs * diffs))


def running_coverage_component(
    series: np.ndarray, sigma2: float, z1: float
) -> np.ndarray:
    """Running exceedance fraction C_n of one component's 1D region.

    series holds X_0..X_N. C_n sums the indicators I(X_j^2 / sigma2 > z1)
    over j = 0..n but divides by n, following the printed convention, so
    the result has N entries for n = 1..N and carries an O(1/n) bias.
    """
    series = np.asarray(series, dtype=float)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    indicators = (series * series / sigma2) > z1
    sums = np.cumsum(indicators)[1:]
    n = np.arange(1, len(series))
    return sums / n


def running_coverage_joint(
    states: np.ndarray, covariance: np.ndarray, z2: float
) -> np.ndarray:
    """Running exceedance fraction D_n of the joint Mahalanobis region.

    Same j = 0..n over n convention as the component version. The quadratic
    form is evaluated through one triangular factorisation of the covariance.
    """
    states = np.asarray(states, dtype=float)
    indicators = mahalanobis_sq(states, covariance) > z2
    sums = np.cumsum(indicators)[1:]
    n = np.arange(1, len(states))
    return sums / n


def mahalanobis_sq(states: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """x^T Sigma^-1 x for each row, via one Cholesky factorisation."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    chol = np.linalg.cholesky(np.asarray(covariance, dtype=float))
    z = np.linalg.solve(chol, states.T)
    return np.einsum("ij,ij->j", z, z)


def first_hitting_time(
    states: np.ndarray, covariance: np.ndarray, z0: float
) -> Optional[int]:
    """Smallest index j (from 0) with x_j^T Sigma^-1 x_j < z0, or None."""
    qform = mahalanobis_sq(states, covariance)
    hits = np.nonzero(qform < z0)[0]
    if len(hits) == 0:
        return None
    return int(hits[0])
