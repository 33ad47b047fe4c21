"""Gaussian competitors: multiple-try Gaussian trial families with
log2-respacing adaptation, and the single-try random-walk MH baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .targets import TargetDistribution

__all__ = [
    "GaussianTrialParams",
    "gaussian_trial_density",
    "gaussian_trial_log_density",
    "adapt_gaussian_sds",
    "GaussianProposals",
    "MhProposalSpec",
    "mh_step",
    "run_mh_chain",
    "MhChain",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianTrialParams:
    """Strictly increasing trial standard deviations s_1 < ... < s_M."""

    sds: tuple[float, ...]

    def __post_init__(self):
        if len(self.sds) < 1:
            raise ValueError("need at least one trial sd")
        if any(s <= 0 for s in self.sds):
            raise ValueError("trial sds must be positive")
        if any(b <= a for a, b in zip(self.sds, self.sds[1:])):
            raise ValueError("trial sds must be strictly increasing")

    @property
    def trials(self) -> int:
        return len(self.sds)


def default_gaussian_sds(trials: int) -> tuple[float, ...]:
    """Initial trial sds 2^(j-2) for j = 1..M."""
    return tuple(2.0 ** (j - 2) for j in range(1, trials + 1))


def gaussian_trial_log_density(j: int, x: float, y: float, p: GaussianTrialParams) -> float:
    if not 1 <= j <= p.trials:
        raise ValueError(f"trial index {j} outside 1..{p.trials}")
    s = p.sds[j - 1]
    z = (y - x) / s
    return -0.5 * z * z - math.log(s * _SQRT_2PI)


def gaussian_trial_density(j: int, x: float, y: float, p: GaussianTrialParams) -> float:
    """N(x, s_j^2) density at y."""
    return math.exp(gaussian_trial_log_density(j, x, y, p))


def adapt_gaussian_sds(
    p: GaussianTrialParams,
    counts: np.ndarray,
    interval: int,
    eta_over: float,
    eta_under: float,
) -> tuple[GaussianTrialParams, bool]:
    """Halve/double the extreme sds by selection frequency, then respace.

    The largest sd is halved when under-selected (count_M < L*eta_under) and
    doubled when over-selected (count_M > L*eta_over); the smallest sd is
    doubled when under-selected and halved when over-selected. Interior sds
    are respaced to be equidistant in log2 between the new extremes. If an
    update would break s_1 < s_M the whole step is a no-op and the clamp
    flag comes back True.

    Returns (new params, clamped).
    """
    counts = np.asarray(counts)
    if counts.shape != (p.trials,):
        raise ValueError("counts length must equal the number of trials")
    if not (0.0 < eta_under < eta_over < 1.0):
        raise ValueError("need 0 < eta_under < eta_over < 1")
    if interval < 1:
        raise ValueError("interval must be >= 1")

    under = interval * eta_under
    over = interval * eta_over
    s1, sm = p.sds[0], p.sds[-1]
    if counts[-1] < under:
        sm *= 0.5
    elif counts[-1] > over:
        sm *= 2.0
    if counts[0] < under:
        s1 *= 2.0
    elif counts[0] > over:
        s1 *= 0.5
    if s1 >= sm:
        return p, True
    m = p.trials
    log_lo, log_hi = math.log2(s1), math.log2(sm)
    sds = tuple(2.0 ** (log_lo + (log_hi - log_lo) * j / (m - 1)) for j in range(m))
    return GaussianTrialParams(sds), False


class GaussianProposals:
    """Per-component Gaussian trial families (the multiple-try baseline)."""

    kind = "gaussian"

    def __init__(self, dim: int, params: GaussianTrialParams,
                 eta_over: float = 0.4, eta_under: float = 0.1):
        self.dim = dim
        self._per_component = [params] * dim
        self.eta_over = eta_over
        self.eta_under = eta_under

    @property
    def trials(self) -> int:
        return self._per_component[0].trials

    def params_for(self, k: int) -> GaussianTrialParams:
        return self._per_component[k]

    def set_params(self, k: int, params: GaussianTrialParams) -> None:
        self._per_component[k] = params

    def sample(self, rng: np.random.Generator, j: int, x: float, k: int) -> float:
        return x + self._per_component[k].sds[j - 1] * rng.standard_normal()

    def log_density(self, j: int, x: float, y: float, k: int) -> float:
        return gaussian_trial_log_density(j, x, y, self._per_component[k])

    def scale_of(self, k: int) -> float:
        """Logged width for adaptation events: the outermost sd."""
        return self._per_component[k].sds[-1]


@dataclass(frozen=True)
class MhProposalSpec:
    """Random-walk proposal: scale times a zero-mean Gaussian (mixture).

    ``covariances`` holds one matrix per mixture component and ``weights``
    their probabilities; a plain Gaussian is a one-component mixture.
    """

    scale: float
    covariances: tuple[np.ndarray, ...]
    weights: tuple[float, ...] = (1.0,)
    _choleskys: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if len(self.covariances) != len(self.weights):
            raise ValueError("one weight per covariance required")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        chols = tuple(np.linalg.cholesky(np.asarray(c, dtype=float)) for c in self.covariances)
        object.__setattr__(self, "_choleskys", chols)

    @property
    def dim(self) -> int:
        return self.covariances[0].shape[0]

    def sample_step(self, rng: np.random.Generator) -> np.ndarray:
        idx = 0
        if len(self.weights) > 1:
            idx = int(rng.choice(len(self.weights), p=self.weights))
        return self.scale * (self._choleskys[idx] @ rng.standard_normal(self.dim))


def mh_step(
    rng: np.random.Generator,
    x: np.ndarray,
    spec: MhProposalSpec,
    target: TargetDistribution,
    log_pi_x: float | None = None,
) -> tuple[np.ndarray, float, bool]:
    """One random-walk Metropolis step with a symmetric proposal.

    Pass the cached log density of the current state to spend exactly one
    target evaluation per step. Returns (state, its log density, accepted).
    """
    if log_pi_x is None:
        log_pi_x = float(target.log_density(x))
    y = x + spec.sample_step(rng)
    log_pi_y = float(target.log_density(y))
    if math.log(rng.random()) < log_pi_y - log_pi_x:
        return y, log_pi_y, True
    return x, log_pi_x, False


@dataclass
class MhChain:
    """Realised MH chain: states (N+1, d) including x0, acceptance flags (N,)."""

    states: np.ndarray
    accepted: np.ndarray
    target_evals: int


def run_mh_chain(
    rng: np.random.Generator,
    target: TargetDistribution,
    spec: MhProposalSpec,
    n_iterations: int,
    x0: np.ndarray,
) -> MhChain:
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (target.dim,):
        raise ValueError("x0 shape does not match target dim")
    states = np.empty((n_iterations + 1, target.dim))
    accepted = np.zeros(n_iterations, dtype=bool)
    states[0] = x
    log_pi = float(target.log_density(x))
    evals = 1
    for n in range(n_iterations):
        x, log_pi, acc = mh_step(rng, x, spec, target, log_pi)
        evals += 1
        states[n + 1] = x
        accepted[n] = acc
    return MhChain(states=states, accepted=accepted, target_evals=evals)


def default_mh_spec(target: TargetDistribution) -> MhProposalSpec:
    """The benchmark random-walk proposals, scaled by 2.4/sqrt(d).

    pi1 uses the equal mixture of the two mixture-component covariances; pi2
    the banana base covariance; pi3 the inverse of its quadratic-form matrix;
    pi4 a unit Gaussian. Gaussian targets use their own covariance.
    """
    d = target.dim
    scale = 2.4 / math.sqrt(d)
    if target.name == "pi1":
        cov1 = np.diag([6.25, 6.25, 6.25, 0.01])
        cov2 = np.diag([6.25, 6.25, 0.25, 0.01])
        return MhProposalSpec(scale=scale, covariances=(cov1, cov2), weights=(0.5, 0.5))
    if target.name == "pi2":
        return MhProposalSpec(scale=scale, covariances=(np.diag(np.r_[100.0, np.ones(7)]),))
    if target.name == "pi3":
        A = np.array([[1.0, 1.0], [1.0, 1.5]])
        return MhProposalSpec(scale=scale, covariances=(np.linalg.inv(A),))
    if target.name == "pi4":
        return MhProposalSpec(scale=2.4, covariances=(np.eye(1),))
    if target.covariance is not None:
        return MhProposalSpec(scale=scale, covariances=(target.covariance,))
    return MhProposalSpec(scale=scale, covariances=(np.eye(d),))
