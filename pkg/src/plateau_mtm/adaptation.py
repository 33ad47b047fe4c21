"""Interval-based width adaptation with diminishing probability, plus the
compact-set containment safeguards.

Adaptation can fire only at iterations divisible by the interval length L.
Whether it fires is gated by the schedule:

- ``diminishing``: with probability P_n = max(0.99^(n-1), 1/sqrt(n))
- ``always``: at every interval boundary
- ``burn_in_only``: like diminishing, but only while n <= burn_in iterations
- ``off``: never

When the gate passes, each component is examined independently: if the
innermost trial was selected more than L*eta1 times in the window the width
is halved; if the outermost was selected more than L*eta2 times it is
doubled (both may fire; the net effect is then no change). Widths are
clamped to [upsilon_min, upsilon_max] and the window counters reset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AdaptationConfig",
    "AdaptationState",
    "adaptation_probability",
    "adaptation_gate",
    "plateau_width_update",
    "maybe_adapt",
    "containment_filter",
]

SCHEDULES = ("diminishing", "always", "burn_in_only", "off")


@dataclass(frozen=True)
class AdaptationConfig:
    interval: int = 50
    eta1: float = 0.4
    eta2: float = 0.4
    schedule: str = "diminishing"
    upsilon_min: float = 1e-6
    upsilon_max: float = 1e6
    containment_low: float = -1e8
    containment_high: float = 1e8
    per_component_gate: bool = False
    burn_in_iterations: int = 0  # used by schedule="burn_in_only"

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if not (0.0 < self.eta1 < 1.0 and 0.0 < self.eta2 < 1.0):
            raise ValueError("eta1 and eta2 must lie in (0, 1)")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if not (0.0 < self.upsilon_min < self.upsilon_max):
            raise ValueError("need 0 < upsilon_min < upsilon_max")
        if self.containment_low >= self.containment_high:
            raise ValueError("containment box is empty")


@dataclass
class AdaptationState:
    """Per-component widths and window selection counters for the extreme trials."""

    upsilon: np.ndarray
    counts_first: np.ndarray = field(default=None)  # innermost trial selections
    counts_last: np.ndarray = field(default=None)  # outermost trial selections

    def __post_init__(self):
        self.upsilon = np.asarray(self.upsilon, dtype=float).copy()
        d = len(self.upsilon)
        if self.counts_first is None:
            self.counts_first = np.zeros(d, dtype=np.int64)
        if self.counts_last is None:
            self.counts_last = np.zeros(d, dtype=np.int64)


def adaptation_probability(n: int) -> float:
    """P_n = max(0.99^(n-1), 1/sqrt(n)); equals 1 at n=1 and decays to 0."""
    if n < 1:
        raise ValueError("iteration must be >= 1")
    return max(0.99 ** (n - 1), 1.0 / math.sqrt(n))


def adaptation_gate(rng: np.random.Generator, cfg: AdaptationConfig, n: int) -> bool:
    """Decide whether the adaptation block runs at the end of iteration n.

    Draws a single uniform shared by all components unless
    ``per_component_gate`` is set (then callers gate per component).
    """
    if cfg.schedule == "off" or n % cfg.interval != 0:
        return False
    if cfg.schedule == "always":
        return True
    if cfg.schedule == "burn_in_only" and n > cfg.burn_in_iterations:
        return False
    return rng.random() < adaptation_probability(n)


def plateau_width_update(
    upsilon: float, c_first: int, c_last: int, cfg: AdaptationConfig
) -> float:
    """Apply the halve/double rule to one width and clamp to the bounds.

    Thresholds are strict: a count equal to L*eta exactly does not trigger.
    """
    threshold1 = cfg.interval * cfg.eta1
    threshold2 = cfg.interval * cfg.eta2
    new = upsilon
    if c_first > threshold1:
        new *= 0.5
    if c_last > threshold2:
        new *= 2.0
    return min(max(new, cfg.upsilon_min), cfg.upsilon_max)


def maybe_adapt(
    rng: np.random.Generator, state: AdaptationState, cfg: AdaptationConfig, n: int
) -> tuple[AdaptationState, list[tuple[int, int, float, float]]]:
    """Run one adaptation check at iteration n.

    Returns the updated state and the list of width-change events
    (iteration, component, old, new). Counters reset whenever the gated
    block runs, even if no width changes.
    """
    events: list[tuple[int, int, float, float]] = []
    d = len(state.upsilon)
    if cfg.per_component_gate:
        fired = [adaptation_gate(rng, cfg, n) for _ in range(d)]
    else:
        shared = adaptation_gate(rng, cfg, n)
        fired = [shared] * d
    if not any(fired):
        return state, events
    for k in range(d):
        if not fired[k]:
            continue
        old = state.upsilon[k]
        new = plateau_width_update(old, state.counts_first[k], state.counts_last[k], cfg)
        if new != old:
            events.append((n, k, old, new))
        state.upsilon[k] = new
        state.counts_first[k] = 0
        state.counts_last[k] = 0
    return state, events


def containment_filter(y: np.ndarray, low: float, high: float) -> bool:
    """True iff every component of y lies inside the box [low, high]^d."""
    y = np.asarray(y)
    return bool(np.all(y >= low) and np.all(y <= high))
