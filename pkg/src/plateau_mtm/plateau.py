"""Plateau base density and the non-overlapping trial proposal family.

The base density is flat on [mu - delta, mu + delta] and decays with
Gaussian tails of scale sigma_left / sigma_right outside; the shared
normaliser is C = sqrt(2 pi sigma_left^2)/2 + sqrt(2 pi sigma_right^2)/2
+ 2 delta, so the pdf is continuous and strictly positive on R.

A trial family with M members is built from these blocks. Trial 1 is a
single plateau centred at the current value x; trials 2..M-1 are equal
two-sided mixtures of plateaus pushed out in rings; trial M uses the heavy
outermost tail scale (varsigma) on its outward-facing sides. With the
half-widths tied (delta = delta1 = upsilon) the ring centres sit at

    x +- (2j - 1) * upsilon        (default)
    x +- 2 (j - 1) * upsilon       (contiguous_centers=True)

The default follows the ring-offset formula 2(j-1)*delta1 + delta, which
leaves a gap of width upsilon between the central plateau and the first
ring; the contiguous variant removes that gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "PlateauParams",
    "PlateauComponent",
    "plateau_normalizer",
    "plateau_pdf",
    "plateau_log_pdf",
    "plateau_sample",
    "trial_center_offset",
    "trial_density",
    "trial_log_density",
    "trial_sample",
    "PlateauProposals",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PlateauParams:
    """One component's trial-family parameters.

    upsilon is the common plateau half-width (adapted online), sigma the
    inner tail scale, varsigma the outermost tail scale, trials the number
    of proposals M.
    """

    upsilon: float = 1.0
    sigma: float = 0.05
    varsigma: float = 3.0
    trials: int = 5
    contiguous_centers: bool = False

    def __post_init__(self):
        if self.upsilon <= 0 or self.sigma <= 0 or self.varsigma <= 0:
            raise ValueError("upsilon, sigma and varsigma must be positive")
        if self.trials < 2:
            raise ValueError("trials must be at least 2")


@dataclass(frozen=True)
class PlateauComponent:
    """A single plateau block: centre mu, half-width delta, tail scales."""

    mu: float
    delta: float
    sigma_left: float
    sigma_right: float

    def __post_init__(self):
        if self.delta <= 0 or self.sigma_left <= 0 or self.sigma_right <= 0:
            raise ValueError("delta and tail scales must be positive")

    @property
    def normalizer(self) -> float:
        return plateau_normalizer(self.delta, self.sigma_left, self.sigma_right)


def plateau_normalizer(delta: float, sigma_left: float, sigma_right: float) -> float:
    """Closed-form normaliser: half Gaussian mass on each side plus the flat part."""
    if delta <= 0 or sigma_left <= 0 or sigma_right <= 0:
        raise ValueError("delta and tail scales must be positive")
    return _SQRT_2PI * sigma_left / 2.0 + _SQRT_2PI * sigma_right / 2.0 + 2.0 * delta


def plateau_log_pdf(y: float, c: PlateauComponent) -> float:
    """Log pdf of the plateau block; piecewise, continuous at the knees."""
    log_c = math.log(c.normalizer)
    lo = c.mu - c.delta
    hi = c.mu + c.delta
    if y < lo:
        z = (y - lo) / c.sigma_left
        return -0.5 * z * z - log_c
    if y > hi:
        z = (y - hi) / c.sigma_right
        return -0.5 * z * z - log_c
    return -log_c


def plateau_pdf(y: float, c: PlateauComponent) -> float:
    """Pdf of the plateau block; equals 1/C on [mu-delta, mu+delta]."""
    return math.exp(plateau_log_pdf(y, c))


def plateau_sample(rng: np.random.Generator, c: PlateauComponent) -> float:
    """Exact draw via the mixture decomposition uniform / half-normal tails."""
    norm = c.normalizer
    w_plateau = 2.0 * c.delta / norm
    w_left = _SQRT_2PI * c.sigma_left / 2.0 / norm
    u = rng.random()
    if u < w_plateau:
        return c.mu - c.delta + 2.0 * c.delta * rng.random()
    if u < w_plateau + w_left:
        return c.mu - c.delta - abs(c.sigma_left * rng.standard_normal())
    return c.mu + c.delta + abs(c.sigma_right * rng.standard_normal())


def trial_center_offset(j: int, p: PlateauParams) -> float:
    """Distance from the current value to the centres of trial j's plateaus."""
    if j == 1:
        return 0.0
    if p.contiguous_centers:
        return 2.0 * (j - 1) * p.upsilon
    return 2.0 * (j - 1) * p.upsilon + p.upsilon


def _trial_components(j: int, x: float, p: PlateauParams) -> tuple[PlateauComponent, ...]:
    if not 1 <= j <= p.trials:
        raise ValueError(f"trial index {j} outside 1..{p.trials}")
    u = p.upsilon
    if j == 1:
        return (PlateauComponent(x, u, p.sigma, p.sigma),)
    off = trial_center_offset(j, p)
    if j == p.trials:
        # outward-facing tails use the heavy scale
        return (
            PlateauComponent(x - off, u, p.varsigma, p.sigma),
            PlateauComponent(x + off, u, p.sigma, p.varsigma),
        )
    return (
        PlateauComponent(x - off, u, p.sigma, p.sigma),
        PlateauComponent(x + off, u, p.sigma, p.sigma),
    )


def trial_log_density(j: int, x: float, y: float, p: PlateauParams) -> float:
    """Log density of trial j's proposal at y given current value x."""
    comps = _trial_components(j, x, p)
    if len(comps) == 1:
        return plateau_log_pdf(y, comps[0])
    la = plateau_log_pdf(y, comps[0])
    lb = plateau_log_pdf(y, comps[1])
    return np.logaddexp(la, lb) - math.log(2.0)


def trial_density(j: int, x: float, y: float, p: PlateauParams) -> float:
    """Density of trial j's proposal at y given current value x."""
    return math.exp(trial_log_density(j, x, y, p))


def trial_sample(rng: np.random.Generator, j: int, x: float, p: PlateauParams) -> float:
    """Exact draw from trial j: pick a side (j >= 2), then a plateau draw."""
    comps = _trial_components(j, x, p)
    if len(comps) == 1:
        return plateau_sample(rng, comps[0])
    c = comps[0] if rng.random() < 0.5 else comps[1]
    return plateau_sample(rng, c)


def _block_log_pdf(y: float, mu: float, delta: float, s_left: float,
                   s_right: float, log_c: float) -> float:
    lo = mu - delta
    if y < lo:
        z = (y - lo) / s_left
        return -0.5 * z * z - log_c
    hi = mu + delta
    if y > hi:
        z = (y - hi) / s_right
        return -0.5 * z * z - log_c
    return -log_c


def _block_sample(rng, mu: float, delta: float, s_left: float, s_right: float,
                  norm: float) -> float:
    u = rng.random() * norm
    if u < 2.0 * delta:
        return mu - delta + 2.0 * delta * rng.random()
    if u < 2.0 * delta + _SQRT_2PI * s_left / 2.0:
        return mu - delta - abs(s_left * rng.standard_normal())
    return mu + delta + abs(s_right * rng.standard_normal())


def _logadd(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))

_LOG_HALF = math.log(0.5)


class _ComponentTable:
    """Precomputed per-component constants for the hot sampling/density path."""

    __slots__ = ("upsilon", "offsets", "c_inner", "c_outer",
                 "log_c_inner", "log_c_outer")

    def __init__(self, p: PlateauParams):
        self.upsilon = p.upsilon
        self.offsets = [trial_center_offset(j, p) for j in range(p.trials + 1)]
        self.c_inner = plateau_normalizer(p.upsilon, p.sigma, p.sigma)
        self.c_outer = plateau_normalizer(p.upsilon, p.varsigma, p.sigma)
        self.log_c_inner = math.log(self.c_inner)
        self.log_c_outer = math.log(self.c_outer)


class PlateauProposals:
    """Per-component plateau trial families with independently adapted widths.

    Implements the proposal-family protocol used by the multiple-try kernel:
    ``trials``, ``sample(rng, j, x, k)``, ``log_density(j, x, y, k)``, plus
    the width accessors the adaptation step drives. Density and sampling go
    through cached normalisers; they agree with :func:`trial_density` and
    :func:`trial_sample` exactly.
    """

    kind = "plateau"

    def __init__(self, dim: int, params: PlateauParams):
        self.dim = dim
        self.template = params
        self._per_component = [params] * dim
        self._tables = [_ComponentTable(params) for _ in range(dim)]

    @property
    def trials(self) -> int:
        return self.template.trials

    def params_for(self, k: int) -> PlateauParams:
        return self._per_component[k]

    @property
    def widths(self) -> np.ndarray:
        return np.array([p.upsilon for p in self._per_component])

    def set_width(self, k: int, upsilon: float) -> None:
        self._per_component[k] = replace(self._per_component[k], upsilon=upsilon)
        self._tables[k] = _ComponentTable(self._per_component[k])

    def sample(self, rng: np.random.Generator, j: int, x: float, k: int) -> float:
        p = self.template
        t = self._tables[k]
        u = t.upsilon
        if j == 1:
            return _block_sample(rng, x, u, p.sigma, p.sigma, t.c_inner)
        off = t.offsets[j]
        if j == p.trials:
            if rng.random() < 0.5:
                return _block_sample(rng, x - off, u, p.varsigma, p.sigma, t.c_outer)
            return _block_sample(rng, x + off, u, p.sigma, p.varsigma, t.c_outer)
        if rng.random() < 0.5:
            return _block_sample(rng, x - off, u, p.sigma, p.sigma, t.c_inner)
        return _block_sample(rng, x + off, u, p.sigma, p.sigma, t.c_inner)

    def log_density(self, j: int, x: float, y: float, k: int) -> float:
        p = self.template
        t = self._tables[k]
        u = t.upsilon
        if j == 1:
            return _block_log_pdf(y, x, u, p.sigma, p.sigma, t.log_c_inner)
        off = t.offsets[j]
        if j == p.trials:
            la = _block_log_pdf(y, x - off, u, p.varsigma, p.sigma, t.log_c_outer)
            lb = _block_log_pdf(y, x + off, u, p.sigma, p.varsigma, t.log_c_outer)
        else:
            la = _block_log_pdf(y, x - off, u, p.sigma, p.sigma, t.log_c_inner)
            lb = _block_log_pdf(y, x + off, u, p.sigma, p.sigma, t.log_c_inner)
        return _logadd(la, lb) + _LOG_HALF

    def scale_of(self, k: int) -> float:
        """Logged width for adaptation events."""
        return self._per_component[k].upsilon
