"""Benchmark target distributions.

All targets expose an un-normalised log density on R^d. The samplers never
need the normalising constant. Six named benchmark targets are built in:

==========  ===  ==========================================================
name        dim  description
==========  ===  ==========================================================
varpi1        5  Gaussian, zero mean, diag(0.001, 0.1, 1, 10, 100)
varpi2        2  Gaussian, zero mean, strong cross-correlation (rho = 0.75)
pi1           4  equal mixture of two Gaussians with well separated modes
pi2           8  banana-shaped twist of N(0, diag(100, 1, ..., 1)), b = 0.03
pi3           2  correlated Gaussian perturbed by cosine oscillations
pi4           1  bi-stable double well perturbed by fast oscillations
==========  ===  ==========================================================

Analytic component variances (and the full covariance where it exists) are
attached when they are known; diagnostics fall back to empirical estimates
otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "TargetDistribution",
    "BananaParams",
    "banana_transform",
    "banana_inverse_transform",
    "make_benchmark_target",
    "BENCHMARK_TARGET_NAMES",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TargetDistribution:
    """A possibly un-normalised log density on R^d.

    ``log_density_fn`` must accept arrays of shape ``(d,)`` or ``(m, d)``
    and return a float or an ``(m,)`` array. Instances are immutable and
    safe to share across parallel repetition workers.
    """

    name: str
    dim: int
    log_density_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    component_variances: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.covariance is not None:
            cov = np.asarray(self.covariance, dtype=float)
            if cov.shape != (self.dim, self.dim):
                raise ValueError("covariance shape does not match dim")
            if not np.allclose(cov, cov.T):
                raise ValueError("covariance must be symmetric")
            if np.linalg.eigvalsh(cov)[0] <= 0:
                raise ValueError("covariance must be positive definite")
            if self.component_variances is not None and not np.allclose(
                np.diag(cov), self.component_variances
            ):
                raise ValueError("covariance diagonal must equal component_variances")

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Evaluate ln pi_tilde(x) for a point ``(d,)`` or a batch ``(m, d)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(
                f"target '{self.name}' has dim {self.dim}, got input of shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("log_density requires finite input")
        return self.log_density_fn(x)


@dataclass(frozen=True)
class BananaParams:
    """Twist parameters of the banana target: curvature ``b`` over a base
    Gaussian with diagonal covariance ``base_covariance``."""

    b: float
    base_covariance: np.ndarray

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be non-negative")


def banana_transform(x: np.ndarray, b: float) -> np.ndarray:
    """Map x to (x1, x2 + b*x1^2 - 100*b, x3, ..., x8).

    Bijective on R^8 for any b; only the second coordinate changes.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 8:
        raise ValueError(f"banana_transform expects 8 components, got shape {x.shape}")
    y = x.copy()
    y[..., 1] = x[..., 1] + b * x[..., 0] ** 2 - 100.0 * b
    return y


def banana_inverse_transform(y: np.ndarray, b: float) -> np.ndarray:
    """Inverse of :func:`banana_transform`."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 8:
        raise ValueError(f"banana_inverse_transform expects 8 components, got shape {y.shape}")
    x = y.copy()
    x[..., 1] = y[..., 1] - b * y[..., 0] ** 2 + 100.0 * b
    return x


def _diag_gaussian_logpdf(x: np.ndarray, mean: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Normalised log pdf of N(mean, diag(variances)), vectorised over rows."""
    z = (x - mean) ** 2 / variances
    const = -0.5 * (len(variances) * _LOG_2PI + np.log(variances).sum())
    return const - 0.5 * z.sum(axis=-1)


def _make_varpi1() -> TargetDistribution:
    variances = np.array([0.001, 0.1, 1.0, 10.0, 100.0])
    inv = 1.0 / variances

    def logpdf(x):
        return -0.5 * (x * x * inv).sum(axis=-1)

    return TargetDistribution(
        name="varpi1",
        dim=5,
        log_density_fn=logpdf,
        component_variances=variances,
        covariance=np.diag(variances),
    )


def _make_varpi2() -> TargetDistribution:
    cov = np.array([[0.25, 1.875], [1.875, 25.0]])
    prec = np.linalg.inv(cov)

    def logpdf(x):
        return -0.5 * np.einsum("...i,ij,...j->...", x, prec, x)

    return TargetDistribution(
        name="varpi2",
        dim=2,
        log_density_fn=logpdf,
        component_variances=np.diag(cov).copy(),
        covariance=cov,
    )


def _make_pi1() -> TargetDistribution:
    mu1 = np.array([5.0, 5.0, 0.0, 0.0])
    mu2 = np.array([15.0, 15.0, 0.0, 0.0])
    var1 = np.array([6.25, 6.25, 6.25, 0.01])
    var2 = np.array([6.25, 6.25, 0.25, 0.01])

    # Mixture moments: Var_k = sum_i w_i (sigma_ik^2 + mu_ik^2) - (sum_i w_i mu_ik)^2
    mean = 0.5 * (mu1 + mu2)
    variances = 0.5 * (var1 + mu1**2) + 0.5 * (var2 + mu2**2) - mean**2

    def logpdf(x):
        # log-sum-exp over the two components; the normalised component pdfs
        # matter (unequal determinants), the overall constant does not.
        a = math.log(0.5) + _diag_gaussian_logpdf(x, mu1, var1)
        b = math.log(0.5) + _diag_gaussian_logpdf(x, mu2, var2)
        return np.logaddexp(a, b)

    return TargetDistribution(
        name="pi1",
        dim=4,
        log_density_fn=logpdf,
        component_variances=variances,
    )


def _make_pi2() -> TargetDistribution:
    b = 0.03
    base_var = np.r_[100.0, np.ones(7)]
    zero = np.zeros(8)

    def logpdf(x):
        return _diag_gaussian_logpdf(banana_transform(x, b), zero, base_var)

    return TargetDistribution(
        name="pi2",
        dim=8,
        log_density_fn=logpdf,
        component_variances=base_var,
        covariance=np.diag(base_var),
    )


def _make_pi3() -> TargetDistribution:
    A = np.array([[1.0, 1.0], [1.0, 1.5]])

    def logpdf(x):
        quad = np.einsum("...i,ij,...j->...", x, A, x)
        return -quad - np.cos(x[..., 0] / 0.1) - 0.5 * np.cos(x[..., 1] / 0.1)

    return TargetDistribution(name="pi3", dim=2, log_density_fn=logpdf)


def _make_pi4() -> TargetDistribution:
    def logpdf(x):
        v = x[..., 0]
        return -(v**4) + 5.0 * v**2 - np.cos(v / 0.02)

    return TargetDistribution(name="pi4", dim=1, log_density_fn=logpdf)


_BUILDERS = {
    "varpi1": _make_varpi1,
    "varpi2": _make_varpi2,
    "pi1": _make_pi1,
    "pi2": _make_pi2,
    "pi3": _make_pi3,
    "pi4": _make_pi4,
}

BENCHMARK_TARGET_NAMES = tuple(_BUILDERS)


def make_benchmark_target(name: str) -> TargetDistribution:
    """Build one of the six named benchmark targets."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(
            f"unknown target '{name}'; expected one of {sorted(_BUILDERS)}"
        ) from None
    return builder()
