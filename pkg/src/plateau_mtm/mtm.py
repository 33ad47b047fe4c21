"""Generic component-wise multiple-try Metropolis kernel.

Each component update draws M trials from its per-trial proposals, weights
them by

    w_j = pi((z_j; x_[-k])) * T_j(x_k, z_j) * lambda_j(x_k, z_j),

selects one in proportion to the weights, builds a reference set from the
selected value, and accepts with probability min{1, sum(w) / sum(w*)}.
All weights are handled in log space; the batch is exponentiated against
its maximum only for the selection draw, and the acceptance ratio uses
log-sum-exp of the raw log weights.

The reference set substitutes the current value at the slot of the
*selected* trial and redraws the other M-1 slots from their proposals at
the selected value. This substitution is what makes the kernel exactly
stationary when the per-trial proposals differ (verified by enumeration on
discrete instances); substituting at the last slot regardless of which
trial won is available via ``reference_slot="last"`` but is biased for
heterogeneous trial families.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .adaptation import (
    AdaptationConfig,
    adaptation_gate,
    containment_filter,
    plateau_width_update,
)
from .gaussian import adapt_gaussian_sds
from .targets import TargetDistribution

__all__ = [
    "WeightFunction",
    "WEIGHT_KINDS",
    "log_trial_weights",
    "select_trial",
    "acceptance_probability",
    "mtm_component_update",
    "MtmUpdateInfo",
    "ChainRecord",
    "run_chain",
]

WEIGHT_KINDS = ("norm_power", "mean_inverse", "product_power", "unit")

NEG_INF = float("-inf")


@dataclass(frozen=True)
class WeightFunction:
    """The lambda factor entering the trial weights.

    kind:
        norm_power     T(x,y) * |y-x|^alpha      (favours distant trials)
        mean_inverse   ((T(x,y) + T(y,x)) / 2)^-1
        product_power  (T(x,y) * T(y,x))^-beta
        unit           1

    norm_power vanishes exactly at y = x, a probability-zero event for
    continuous proposals; an all-zero weight batch is treated as a
    rejected update.
    """

    kind: str = "norm_power"
    alpha: float = 2.5
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"kind must be one of {WEIGHT_KINDS}")

    @property
    def needs_reverse(self) -> bool:
        return self.kind in ("mean_inverse", "product_power")

    def log_lambda(self, log_t_fwd: float, log_t_rev: float, distance: float) -> float:
        if self.kind == "norm_power":
            if distance == 0.0:
                return NEG_INF
            return log_t_fwd + self.alpha * math.log(distance)
        if self.kind == "mean_inverse":
            return math.log(2.0) - np.logaddexp(log_t_fwd, log_t_rev)
        if self.kind == "product_power":
            return -self.beta * (log_t_fwd + log_t_rev)
        return 0.0


def log_trial_weights(
    family,
    target: TargetDistribution,
    x: np.ndarray,
    k: int,
    values: np.ndarray,
    weight_fn: WeightFunction,
) -> np.ndarray:
    """Log weights of the M candidate values for component k given state x.

    ``values[j-1]`` is the candidate produced by (or evaluated under) trial j.
    Entries may be -inf; the caller decides how to treat an all--inf batch.
    """
    m = family.trials
    values = np.asarray(values, dtype=float)
    cands = np.repeat(x[None, :], m, axis=0)
    cands[:, k] = values
    log_pi = np.atleast_1d(target.log_density(cands))
    xk = float(x[k])
    out = np.empty(m)
    for j in range(1, m + 1):
        z = float(values[j - 1])
        lt_fwd = family.log_density(j, xk, z, k)
        lt_rev = family.log_density(j, z, xk, k) if weight_fn.needs_reverse else lt_fwd
        ll = weight_fn.log_lambda(lt_fwd, lt_rev, abs(z - xk))
        out[j - 1] = log_pi[j - 1] + lt_fwd + ll
    return out


def select_trial(rng: np.random.Generator, weights: np.ndarray) -> Optional[int]:
    """Categorical draw proportional to non-negative weights; 1-based index.

    Returns None when every weight is zero (the caller skips the update).
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0.0:
        return None
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i + 1
    return len(weights)  # guard against roundoff on the last bin


def _select_from_log(rng: np.random.Generator, log_weights: np.ndarray) -> Optional[int]:
    m = np.max(log_weights)
    if m == NEG_INF:
        return None
    return select_trial(rng, np.exp(log_weights - m))


def _logsumexp(a: np.ndarray) -> float:
    m = np.max(a)
    if m == NEG_INF:
        return NEG_INF
    return float(m + math.log(np.exp(a - m).sum()))


def acceptance_probability(log_num: float, log_den: float) -> float:
    """min{1, sum(numerator weights) / sum(denominator weights)} in log space.

    A zero denominator with positive numerator accepts; both zero rejects.
    """
    if log_num == NEG_INF:
        return 0.0
    if log_den == NEG_INF:
        return 1.0
    return min(1.0, math.exp(min(log_num - log_den, 0.0)))


@dataclass
class MtmUpdateInfo:
    selected: Optional[int]  # 1-based trial index, None if no trial had weight
    accepted: bool
    log_num: float
    log_den: float
    target_evals: int
    trial_evals: int
    reference_evals: int
    candidate: Optional[float] = None  # the selected trial value


def mtm_component_update(
    rng: np.random.Generator,
    x: np.ndarray,
    k: int,
    family,
    target: TargetDistribution,
    weight_fn: WeightFunction,
    containment: Optional[tuple[float, float]] = None,
    reference_slot: str = "selected",
) -> tuple[np.ndarray, MtmUpdateInfo]:
    """One multiple-try update of component k. Does not mutate x.

    Returns the next state (a new array on acceptance, x itself otherwise)
    and bookkeeping about the update.
    """
    if reference_slot not in ("selected", "last"):
        raise ValueError("reference_slot must be 'selected' or 'last'")
    m = family.trials
    xk = float(x[k])

    trials = np.empty(m)
    for j in range(1, m + 1):
        trials[j - 1] = family.sample(rng, j, xk, k)
    lw_num = log_trial_weights(family, target, x, k, trials, weight_fn)

    selected = _select_from_log(rng, lw_num)
    if selected is None:
        return x, MtmUpdateInfo(None, False, NEG_INF, NEG_INF, m, m, 0)

    y = float(trials[selected - 1])
    y_vec = x.copy()
    y_vec[k] = y

    if containment is not None and not containment_filter(y_vec, *containment):
        # Appendix-style containment: proposals outside the box are refused
        # outright, without the usual ratio.
        return x, MtmUpdateInfo(selected, False, _logsumexp(lw_num), NEG_INF, m, m, 0, y)

    slot = selected if reference_slot == "selected" else m
    refs = np.empty(m)
    for j in range(1, m + 1):
        refs[j - 1] = xk if j == slot else family.sample(rng, j, y, k)
    lw_den = log_trial_weights(family, target, y_vec, k, refs, weight_fn)

    log_num = _logsumexp(lw_num)
    log_den = _logsumexp(lw_den)
    alpha = acceptance_probability(log_num, log_den)
    accepted = rng.random() < alpha
    info = MtmUpdateInfo(selected, accepted, log_num, log_den, 2 * m, m, m, y)
    return (y_vec if accepted else x), info


@dataclass
class ChainRecord:
    """One realised chain with its per-iteration bookkeeping.

    ``states`` has N+1 rows (the initial state first); ``selected`` holds
    1-based selected-trial indices with 0 meaning no trial had weight;
    ``adapt_events`` rows are (iteration, component, old scale, new scale).
    """

    states: np.ndarray
    selected: np.ndarray
    accepted: np.ndarray
    adapt_events: list
    selected_counts: np.ndarray
    target_evals: int
    trial_evals: int
    reference_evals: int
    seed_key: Optional[tuple] = None
    config_digest: Optional[str] = None

    @property
    def n_iterations(self) -> int:
        return self.states.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def run_chain(
    rng: np.random.Generator,
    target: TargetDistribution,
    family,
    weight_fn: WeightFunction,
    n_iterations: int,
    x0: np.ndarray,
    adapt_cfg: Optional[AdaptationConfig] = None,
    count_on_accept: bool = False,
    reference_slot: str = "selected",
) -> ChainRecord:
    """Run a component-wise multiple-try chain for n_iterations full sweeps.

    Components are swept in fixed ascending order. The adaptation check
    runs between iterations (after each completed sweep) so a window always
    covers whole sweeps; selection counters feed it and reset when it fires.
    """
    x = np.asarray(x0, dtype=float).copy()
    d = target.dim
    if x.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},)")
    m = family.trials

    containment = None
    if adapt_cfg is not None:
        containment = (adapt_cfg.containment_low, adapt_cfg.containment_high)
        if not containment_filter(x, *containment):
            raise ValueError("x0 lies outside the containment box")

    states = np.empty((n_iterations + 1, d))
    states[0] = x
    selected = np.zeros((n_iterations, d), dtype=np.int16)
    accepted = np.zeros((n_iterations, d), dtype=bool)
    cumulative_counts = np.zeros((m, d), dtype=np.int64)
    window_counts = np.zeros((m, d), dtype=np.int64)
    adapt_events: list[tuple[int, int, float, float]] = []
    target_evals = trial_evals = reference_evals = 0

    for n in range(1, n_iterations + 1):
        for k in range(d):
            x, info = mtm_component_update(
                rng, x, k, family, target, weight_fn,
                containment=containment, reference_slot=reference_slot,
            )
            target_evals += info.target_evals
            trial_evals += info.trial_evals
            reference_evals += info.reference_evals
            if info.selected is not None:
                selected[n - 1, k] = info.selected
                accepted[n - 1, k] = info.accepted
                if info.accepted or not count_on_accept:
                    cumulative_counts[info.selected - 1, k] += 1
                    window_counts[info.selected - 1, k] += 1
        states[n] = x
        if adapt_cfg is not None and adapt_cfg.schedule != "off":
            adapt_events.extend(
                _adapt_family(rng, family, window_counts, adapt_cfg, n)
            )

    return ChainRecord(
        states=states,
        selected=selected,
        accepted=accepted,
        adapt_events=adapt_events,
        selected_counts=cumulative_counts,
        target_evals=target_evals,
        trial_evals=trial_evals,
        reference_evals=reference_evals,
    )


def _adapt_family(
    rng: np.random.Generator,
    family,
    window_counts: np.ndarray,
    cfg: AdaptationConfig,
    n: int,
) -> list[tuple[int, int, float, float]]:
    """Gate and apply the family's width rule; resets fired windows."""
    d = family.dim
    if cfg.per_component_gate:
        fired = [adaptation_gate(rng, cfg, n) for _ in range(d)]
    else:
        shared = adaptation_gate(rng, cfg, n)
        fired = [shared] * d
    events: list[tuple[int, int, float, float]] = []
    if not any(fired):
        return events
    m = family.trials
    for k in range(d):
        if not fired[k]:
            continue
        old_scale = family.scale_of(k)
        if family.kind == "plateau":
            new = plateau_width_update(
                family.params_for(k).upsilon,
                int(window_counts[0, k]),
                int(window_counts[m - 1, k]),
                cfg,
            )
            family.set_width(k, new)
        else:
            new_params, _clamped = adapt_gaussian_sds(
                family.params_for(k), window_counts[:, k],
                cfg.interval, family.eta_over, family.eta_under,
            )
            family.set_params(k, new_params)
        new_scale = family.scale_of(k)
        if new_scale != old_scale:
            events.append((n, k, old_scale, new_scale))
        window_counts[:, k] = 0
    return events
