"""Adaptive component-wise multiple-try Metropolis with non-overlapping
plateau proposal distributions, Gaussian baselines, chain diagnostics and a
reproducible benchmark harness."""

from .adaptation import (
    AdaptationConfig,
    AdaptationState,
    adaptation_probability,
    containment_filter,
    maybe_adapt,
)
from .diagnostics import (
    MetricRecord,
    act_initial_sequence,
    asjd,
    chisq_quantile,
    first_hitting_time,
    running_coverage_component,
    running_coverage_joint,
)
from .gaussian import (
    GaussianProposals,
    GaussianTrialParams,
    MhProposalSpec,
    adapt_gaussian_sds,
    gaussian_trial_density,
    mh_step,
    run_mh_chain,
)
from .harness import (
    ExperimentConfig,
    load_config,
    preset_configs,
    run_experiment,
    summarize,
)
from .mtm import (
    ChainRecord,
    WeightFunction,
    acceptance_probability,
    log_trial_weights,
    mtm_component_update,
    run_chain,
    select_trial,
)
from .plateau import (
    PlateauComponent,
    PlateauParams,
    PlateauProposals,
    plateau_normalizer,
    plateau_pdf,
    plateau_sample,
    trial_density,
    trial_sample,
)
from .targets import (
    TargetDistribution,
    banana_transform,
    make_benchmark_target,
)

__version__ = "0.1.0"
