"""Experiment orchestration: configuration, seeded repetition farming,
burn-in handling, metric persistence and summaries.

Reproducibility contract: repetition r of an experiment with seed s uses a
Philox generator seeded by SeedSequence(entropy=s, spawn_key=(r,)). The
initial state is drawn first from that stream, then the chain consumes it
sequentially, so results are independent of how repetitions are scheduled
across workers. Identical config + seed give byte-identical metrics.csv.
"""
from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagnostics
from .adaptation import SCHEDULES, AdaptationConfig
from .gaussian import (
    GaussianProposals,
    GaussianTrialParams,
    default_gaussian_sds,
    default_mh_spec,
    MhProposalSpec,
    run_mh_chain,
)
from .mtm import WEIGHT_KINDS, WeightFunction, run_chain
from .plateau import PlateauParams, PlateauProposals
from .targets import TargetDistribution, make_benchmark_target

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "run_repetition",
    "summarize",
    "preset_configs",
    "PRESET_STUDIES",
    "CSV_HEADER",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
CSV_HEADER = "repetition,metric,component,n,value"

SAMPLER_KINDS = ("ap", "ag1", "ag2", "mh")
METRIC_KINDS = ("act", "asjd", "coverage", "hitting")


class ConfigError(Exception):
    """Invalid configuration; maps to a usage error at the CLI."""


@dataclass(frozen=True)
class ExperimentConfig:
    target_name: str
    sampler: str
    iterations: int
    repetitions: int
    seed: int = 0
    trials: int = 5
    weight_kind: str = "norm_power"
    alpha: Optional[float] = None  # None resolves to 2.5 (2.9 for ag2)
    beta: float = 1.0
    upsilon_init: float = 1.0
    sigma: float = 0.05
    varsigma: float = 3.0
    contiguous_centers: bool = False
    gaussian_sds_init: Optional[tuple[float, ...]] = None
    eta_over: float = 0.4
    eta_under: float = 0.1
    count_on_accept: bool = False
    reference_slot: str = "selected"
    mh_scale: Optional[float] = None
    match_evaluations: bool = False
    interval: int = 50
    eta1: float = 0.4
    eta2: float = 0.4
    schedule: str = "diminishing"
    upsilon_min: float = 1e-6
    upsilon_max: float = 1e6
    containment_low: float = -1e8
    containment_high: float = 1e8
    per_component_gate: bool = False
    burn_in_fraction: float = 0.5
    x0_mode: str = "fixed"
    x0: Optional[tuple[float, ...]] = None
    x0_low: float = -5.0
    x0_high: float = 5.0
    metrics: tuple[str, ...] = ("act", "asjd")
    coverage_p: float = 0.99
    hitting_p: float = 0.95
    save_chains: bool = False
    workers: int = 1
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.sampler not in SAMPLER_KINDS:
            raise ConfigError(f"sampler must be one of {SAMPLER_KINDS}")
        if self.weight_kind not in WEIGHT_KINDS:
            raise ConfigError(f"weight_fn must be one of {WEIGHT_KINDS}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {SCHEDULES}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")
        if self.x0_mode not in ("fixed", "uniform"):
            raise ConfigError("x0_mode must be 'fixed' or 'uniform'")
        if self.reference_slot not in ("selected", "last"):
            raise ConfigError("reference_slot must be 'selected' or 'last'")
        unknown = set(self.metrics) - set(METRIC_KINDS)
        if unknown:
            raise ConfigError(f"unknown metrics {sorted(unknown)}")
        if not self.metrics:
            raise ConfigError("at least one metric is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return 2.9 if self.sampler == "ag2" else 2.5

    def effective_iterations(self, dim: int) -> int:
        """MH runs d*M times longer when matching target-evaluation counts."""
        if self.sampler == "mh" and self.match_evaluations:
            return self.iterations * dim * self.trials
        return self.iterations

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("x0", "metrics", "gaussian_sds_init"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    def digest(self) -> str:
        """Hash of the science-relevant configuration (execution details
        such as output paths, worker counts and chain dumping excluded)."""
        payload = self.to_dict()
        for key in ("output_dir", "workers", "save_chains"):
            payload.pop(key)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _coerce(cfg_dict: dict) -> ExperimentConfig:
    for key in ("x0", "metrics", "gaussian_sds_init"):
        if cfg_dict.get(key) is not None:
            cfg_dict[key] = tuple(cfg_dict[key])
    try:
        return ExperimentConfig(**cfg_dict)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


_CONFIG_SECTIONS = {
    "target": {"name": "target_name"},
    "sampler": {
        "kind": "sampler", "trials": "trials", "weight_fn": "weight_kind",
        "alpha": "alpha", "beta": "beta", "upsilon_init": "upsilon_init",
        "sigma": "sigma", "varsigma": "varsigma",
        "contiguous_centers": "contiguous_centers",
        "gaussian_sds_init": "gaussian_sds_init",
        "eta_over": "eta_over", "eta_under": "eta_under",
        "count_on_accept": "count_on_accept",
        "reference_slot": "reference_slot",
        "mh_scale": "mh_scale", "match_evaluations": "match_evaluations",
    },
    "adaptation": {
        "interval": "interval", "eta1": "eta1", "eta2": "eta2",
        "schedule": "schedule", "upsilon_min": "upsilon_min",
        "upsilon_max": "upsilon_max", "containment_low": "containment_low",
        "containment_high": "containment_high",
        "per_component_gate": "per_component_gate",
    },
    "run": {
        "iterations": "iterations", "repetitions": "repetitions",
        "seed": "seed", "burn_in_fraction": "burn_in_fraction",
        "x0_mode": "x0_mode", "x0": "x0", "x0_low": "x0_low",
        "x0_high": "x0_high", "metrics": "metrics",
        "coverage_p": "coverage_p", "hitting_p": "hitting_p",
        "save_chains": "save_chains", "workers": "workers",
    },
    "output": {"directory": "output_dir"},
}


def load_config(path: str) -> ExperimentConfig:
    """Read an experiment config from a TOML file (sections: target,
    sampler, adaptation, run, output; see README for the grammar)."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None

    flat: dict = {}
    for section, content in doc.items():
        mapping = _CONFIG_SECTIONS.get(section)
        if mapping is None:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in content.items():
            if key not in mapping:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            flat[mapping[key]] = value
    for required in ("target_name", "sampler", "iterations", "repetitions"):
        if required not in flat:
            raise ConfigError(f"missing required config value: {required}")
    return _coerce(flat)


def _build_family(cfg: ExperimentConfig, dim: int):
    if cfg.sampler == "ap":
        params = PlateauParams(
            upsilon=cfg.upsilon_init, sigma=cfg.sigma, varsigma=cfg.varsigma,
            trials=cfg.trials, contiguous_centers=cfg.contiguous_centers,
        )
        return PlateauProposals(dim, params)
    sds = cfg.gaussian_sds_init or default_gaussian_sds(cfg.trials)
    return GaussianProposals(
        dim, GaussianTrialParams(tuple(float(s) for s in sds)),
        eta_over=cfg.eta_over, eta_under=cfg.eta_under,
    )


def _adaptation_config(cfg: ExperimentConfig, n_effective: int) -> AdaptationConfig:
    burn_in = int(math.floor(cfg.burn_in_fraction * n_effective))
    return AdaptationConfig(
        interval=cfg.interval, eta1=cfg.eta1, eta2=cfg.eta2,
        schedule=cfg.schedule, upsilon_min=cfg.upsilon_min,
        upsilon_max=cfg.upsilon_max, containment_low=cfg.containment_low,
        containment_high=cfg.containment_high,
        per_component_gate=cfg.per_component_gate,
        burn_in_iterations=burn_in,
    )


def _initial_state(cfg: ExperimentConfig, dim: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.x0_mode == "uniform":
        return rng.uniform(cfg.x0_low, cfg.x0_high, size=dim)
    if cfg.x0 is None:
        return np.zeros(dim)
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.shape != (dim,):
        raise ConfigError(f"x0 must have {dim} components for {cfg.target_name}")
    return x0


def repetition_rng(seed: int, rep: int) -> np.random.Generator:
    """The documented substream rule: Philox keyed by (seed, repetition)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
    )


@dataclass
class RepetitionResult:
    repetition: int
    rows: list  # (metric, component or None, n or None, value or None)
    coverage_grid: Optional[np.ndarray] = None
    coverage_component: Optional[np.ndarray] = None  # (d, len(grid))
    coverage_joint: Optional[np.ndarray] = None
    target_evals: int = 0
    trial_evals: int = 0
    reference_evals: int = 0
    chain_blob: Optional[bytes] = None


def _metric_rows_for_chain(
    cfg: ExperimentConfig,
    target: TargetDistribution,
    states: np.ndarray,
    n_effective: int,
) -> tuple[list, Optional[np.ndarray], Optional[np.ndarray], Optional[np.ndarray]]:
    """All metric rows for one realised chain, in the canonical row order:
    act by component, asjd by component, component coverage, joint
    coverage, hitting time."""
    d = target.dim
    rows: list = []
    n_burn = int(math.floor(cfg.burn_in_fraction * n_effective))
    post = states[n_burn:]

    if "act" in cfg.metrics:
        for k in range(d):
            var_k = None
            if target.component_variances is not None:
                var_k = float(target.component_variances[k])
            rows.append(("act", k + 1, None,
                         diagnostics.act_initial_sequence(post[:, k], var_k)))
    if "asjd" in cfg.metrics:
        for k in range(d):
            rows.append(("asjd", k + 1, None, diagnostics.asjd(post[:, k])))

    grid = comp_traj = joint_traj = None
    if "coverage" in cfg.metrics:
        if target.component_variances is None:
            raise ConfigError(
                f"coverage metrics need analytic variances; target "
                f"'{target.name}' has none"
            )
        z1 = diagnostics.chisq_quantile(cfg.coverage_p, 1)
        grid = np.unique(np.linspace(1, n_effective, min(200, n_effective)).astype(int))
        comp_traj = np.empty((d, len(grid)))
        for k in range(d):
            c = diagnostics.running_coverage_component(
                states[:, k], float(target.component_variances[k]), z1
            )
            comp_traj[k] = c[grid - 1]
            rows.append(("coverage_component", k + 1, n_effective, float(c[-1])))
        if target.covariance is not None:
            z2 = diagnostics.chisq_quantile(cfg.coverage_p, d)
            dn = diagnostics.running_coverage_joint(states, target.covariance, z2)
            joint_traj = dn[grid - 1]
            rows.append(("coverage_joint", None, n_effective, float(dn[-1])))

    if "hitting" in cfg.metrics:
        if target.covariance is None:
            raise ConfigError(
                f"hitting metrics need a target covariance; target "
                f"'{target.name}' has none"
            )
        z0 = diagnostics.chisq_quantile(cfg.hitting_p, d)
        j = diagnostics.first_hitting_time(states, target.covariance, z0)
        rows.append(("hitting_time", None, None, None if j is None else float(j)))
    return rows, grid, comp_traj, joint_traj


def run_repetition(cfg: ExperimentConfig, rep: int) -> RepetitionResult:
    """Run one seeded repetition and compute its metric rows."""
    target = make_benchmark_target(cfg.target_name)
    d = target.dim
    n_effective = cfg.effective_iterations(d)
    rng = repetition_rng(cfg.seed, rep)
    x0 = _initial_state(cfg, d, rng)

    adapt_events: list = []
    selected = accepted = None
    if cfg.sampler == "mh":
        spec = default_mh_spec(target)
        if cfg.mh_scale is not None:
            spec = MhProposalSpec(
                scale=cfg.mh_scale, covariances=spec.covariances, weights=spec.weights
            )
        chain = run_mh_chain(rng, target, spec, n_effective, x0)
        states = chain.states
        target_evals, trial_evals, reference_evals = chain.target_evals, 0, 0
        accepted = chain.accepted
    else:
        family = _build_family(cfg, d)
        weight_fn = WeightFunction(kind=cfg.weight_kind, alpha=cfg.resolved_alpha,
                                   beta=cfg.beta)
        record = run_chain(
            rng, target, family, weight_fn, n_effective, x0,
            adapt_cfg=_adaptation_config(cfg, n_effective),
            count_on_accept=cfg.count_on_accept,
            reference_slot=cfg.reference_slot,
        )
        states = record.states
        adapt_events = record.adapt_events
        selected, accepted = record.selected, record.accepted
        target_evals = record.target_evals
        trial_evals = record.trial_evals
        reference_evals = record.reference_evals

    rows, grid, comp_traj, joint_traj = _metric_rows_for_chain(
        cfg, target, states, n_effective
    )

    blob = None
    if cfg.save_chains:
        blob = _chain_blob(cfg, rep, states, selected, accepted, adapt_events,
                           target_evals)
    return RepetitionResult(
        repetition=rep, rows=rows, coverage_grid=grid,
        coverage_component=comp_traj, coverage_joint=joint_traj,
        target_evals=target_evals, trial_evals=trial_evals,
        reference_evals=reference_evals, chain_blob=blob,
    )


def _chain_blob(cfg, rep, states, selected, accepted, adapt_events, target_evals) -> bytes:
    buf = io.BytesIO()
    events = np.asarray(adapt_events, dtype=float).reshape(-1, 4)
    np.savez_compressed(
        buf,
        states=states,
        selected=np.zeros((0, 0), dtype=np.int16) if selected is None else selected,
        accepted=np.zeros(0, dtype=bool) if accepted is None else accepted,
        adapt_events=events,
        repetition=np.int64(rep),
        target_evals=np.int64(target_evals),
        config_json=np.bytes_(json.dumps(cfg.to_dict(), sort_keys=True).encode()),
    )
    return buf.getvalue()


def _format_value(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def rows_to_csv(all_rows: list) -> str:
    """Render (repetition, metric, component, n, value) rows as the stable
    CSV format (header fixed, floats via shortest round-trip repr)."""
    lines = [CSV_HEADER]
    for rep, metric, component, n, value in all_rows:
        lines.append(
            f"{rep},{metric},{'' if component is None else component},"
            f"{'' if n is None else n},{_format_value(value)}"
        )
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, data: str | bytes) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summarize(records: list) -> dict:
    """Per (metric, component) summary: mean, median and the 2.5% / 97.5%
    empirical quantiles (linear interpolation of order statistics).

    records are (repetition, metric, component, n, value) tuples; absent
    values (e.g. hitting times that never occurred) are counted separately.
    """
    if not records:
        raise ValueError("no metric records to summarise")
    groups: dict[tuple[str, Optional[int]], list] = {}
    absent: dict[tuple[str, Optional[int]], int] = {}
    for _rep, metric, component, _n, value in records:
        key = (metric, component)
        groups.setdefault(key, [])
        absent.setdefault(key, 0)
        if value is None:
            absent[key] += 1
        else:
            groups[key].append(value)

    out: dict = {}
    for (metric, component), values in sorted(
        groups.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1])
    ):
        comp_key = "joint" if component is None else str(component)
        stats: dict = {"count": len(values) + absent[(metric, component)],
                       "absent": absent[(metric, component)]}
        if values:
            arr = np.asarray(values, dtype=float)
            stats.update(
                mean=float(arr.mean()),
                median=float(np.quantile(arr, 0.5, method="linear")),
                q025=float(np.quantile(arr, 0.025, method="linear")),
                q975=float(np.quantile(arr, 0.975, method="linear")),
            )
        out.setdefault(metric, {})[comp_key] = stats
    return out


def _aggregate_coverage(results: list[RepetitionResult]) -> Optional[dict]:
    with_cov = [r for r in results if r.coverage_grid is not None]
    if not with_cov:
        return None
    grid = with_cov[0].coverage_grid
    out = {"grid": [int(g) for g in grid]}
    comp = np.stack([r.coverage_component for r in with_cov])  # (R, d, G)
    out["component"] = {
        str(k + 1): {
            "mean": comp[:, k].mean(axis=0).tolist(),
            "q025": np.quantile(comp[:, k], 0.025, axis=0, method="linear").tolist(),
            "q975": np.quantile(comp[:, k], 0.975, axis=0, method="linear").tolist(),
        }
        for k in range(comp.shape[1])
    }
    if with_cov[0].coverage_joint is not None:
        joint = np.stack([r.coverage_joint for r in with_cov])
        out["joint"] = {
            "mean": joint.mean(axis=0).tolist(),
            "q025": np.quantile(joint, 0.025, axis=0, method="linear").tolist(),
            "q975": np.quantile(joint, 0.975, axis=0, method="linear").tolist(),
        }
    return out


def _star_run_repetition(args) -> RepetitionResult:
    cfg, rep = args
    return run_repetition(cfg, rep)


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[str] = None) -> dict:
    """Run all repetitions, write metrics.csv / summary.json (and optional
    chain dumps) atomically, and return the summary dictionary."""
    out_dir = output_dir or cfg.output_dir
    if out_dir is None:
        raise ConfigError("no output directory configured")
    os.makedirs(out_dir, exist_ok=True)

    target = make_benchmark_target(cfg.target_name)  # validates target name early
    n_effective = cfg.effective_iterations(target.dim)

    jobs = [(cfg, r) for r in range(cfg.repetitions)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_star_run_repetition, jobs))
    else:
        results = [run_repetition(cfg, r) for r in range(cfg.repetitions)]
    results.sort(key=lambda r: r.repetition)  # merge order independent of scheduling

    all_rows = [
        (res.repetition, *row) for res in results for row in res.rows
    ]
    csv_text = rows_to_csv(all_rows)
    _atomic_write(os.path.join(out_dir, "metrics.csv"), csv_text)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "iterations_effective": n_effective,
        "metrics": summarize(all_rows),
        "evaluations": {
            "target": [r.target_evals for r in results],
            "trials": [r.trial_evals for r in results],
            "references": [r.reference_evals for r in results],
        },
    }
    coverage = _aggregate_coverage(results)
    if coverage is not None:
        summary["coverage_trajectory"] = coverage
    _atomic_write(
        os.path.join(out_dir, "summary.json"),
        json.dumps(summary, sort_keys=True, indent=2) + "\n",
    )

    if cfg.save_chains:
        chains_dir = os.path.join(out_dir, "chains")
        os.makedirs(chains_dir, exist_ok=True)
        for res in results:
            if res.chain_blob is not None:
                _atomic_write(
                    os.path.join(chains_dir, f"r{res.repetition}.bin"), res.chain_blob
                )
    return summary


def diagnose_chain_file(path: str) -> tuple[int, list]:
    """Recompute the metric rows of a stored chain dump.

    Returns (repetition, rows); the rows match the corresponding block of
    the original metrics.csv exactly.
    """
    with np.load(path, allow_pickle=False) as data:
        states = data["states"]
        rep = int(data["repetition"])
        cfg_dict = json.loads(bytes(data["config_json"]).decode())
    cfg = _coerce(cfg_dict)
    target = make_benchmark_target(cfg.target_name)
    rows, _, _, _ = _metric_rows_for_chain(
        cfg, target, states, cfg.effective_iterations(target.dim)
    )
    return rep, [(rep, *row) for row in rows]


# ---------------------------------------------------------------------------
# Reproduction presets (desk scale)

PRESET_STUDIES = (
    "coverage-varpi1",
    "coverage-varpi2",
    "hitting-varpi2",
    "bench-pi1",
    "bench-pi2",
    "bench-pi3",
    "bench-pi4",
)

_BENCH_ITERATIONS = {"pi1": 4000, "pi2": 10000, "pi3": 3000, "pi4": 3000}


def preset_configs(
    study: str,
    seed: int = 0,
    repetitions: Optional[int] = None,
    iterations: Optional[int] = None,
) -> list[tuple[str, ExperimentConfig]]:
    """Pre-baked desk-scale study configurations, one per sampler label."""
    if study not in PRESET_STUDIES:
        raise ConfigError(f"unknown study '{study}'; expected one of {PRESET_STUDIES}")

    if study.startswith("coverage-"):
        target = study.split("-", 1)[1]
        dim = 5 if target == "varpi1" else 2
        base = dict(
            target_name=target,
            iterations=iterations or 10_000,
            repetitions=repetitions or 50,
            seed=seed,
            schedule="always",
            burn_in_fraction=0.0,
            x0_mode="fixed",
            x0=tuple([0.0] * dim),
            metrics=("coverage",),
        )
        return [
            ("ap", ExperimentConfig(sampler="ap", **base)),
            ("ag2", ExperimentConfig(sampler="ag2", **base)),
        ]

    if study == "hitting-varpi2":
        base = dict(
            target_name="varpi2",
            iterations=iterations or 1000,
            repetitions=repetitions or 100,
            seed=seed,
            schedule="always",
            burn_in_fraction=0.0,
            x0_mode="fixed",
            x0=(50.0, 50.0),
            metrics=("hitting",),
        )
        return [
            ("ap", ExperimentConfig(sampler="ap", **base)),
            ("ag2", ExperimentConfig(sampler="ag2", **base)),
        ]

    target = study.split("-", 1)[1]
    base = dict(
        target_name=target,
        iterations=iterations or _BENCH_ITERATIONS[target],
        repetitions=repetitions or 20,
        seed=seed,
        schedule="burn_in_only",
        burn_in_fraction=0.5,
        x0_mode="uniform",
        metrics=("act", "asjd"),
    )
    return [
        ("ap", ExperimentConfig(sampler="ap", **base)),
        ("ag1", ExperimentConfig(sampler="ag1", **base)),
        ("ag2", ExperimentConfig(sampler="ag2", **base)),
        ("mh", ExperimentConfig(sampler="mh", match_evaluations=True, **base)),
    ]
