"""Probabilistic conflict-redistribution fusion and distributed tracking.

A library of density-fusion rules (discrete PCR5, its probabilistic
restriction, Bayesian product fusion, mean fusion, and the whitened
selection kernel) together with a multi-sensor bearing-only particle
filtering simulator that compares the rules inside a distributed
feedback architecture.
"""

from .densities import (
    DegenerateFusionError,
    Gaussian1D,
    GridDensity1D,
    bayes_fuse_gaussian,
    gaussian_pair_grid,
    grid_bayes_fuse,
    grid_pcr5_fuse,
)
from .discrete import (
    DiscreteBBA,
    DiscreteProbability,
    FiniteFrame,
    FrameMismatchError,
    conjunctive_combine,
    discrete_p_pcr5,
    discrete_pcr5,
)
from .distributed import (
    FusionRule,
    LocalPosterior,
    feedback,
    fuse,
    fuse_bayes,
    fuse_mean,
    fuse_pcr5,
    fuse_whitened,
    local_step,
)
from .filtering import (
    FilterDivergenceError,
    Measurement,
    MotionModel,
    Particle,
    ParticleCloud,
    Sensor,
    StateVector4,
    bearing,
    kde_densities,
    kde_density,
    likelihood,
    likelihoods,
    predict,
    systematic_resample,
    update_weights,
    wrap_angle,
)
from .sampling import (
    EvaluatedSample,
    ZeroWeightError,
    gaussian_source,
    mean_fuse_select,
    pcr5_sample_batch,
    pcr5_select,
    weighted_select,
)
from .scenario import (
    InitSpec,
    MonteCarloSummary,
    RunMetrics,
    ScenarioConfig,
    TrajectorySpec,
    generate_measurements,
    run_filter,
    run_monte_carlo,
    simulate_truth,
    truth_digest,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateFusionError",
    "DiscreteBBA",
    "DiscreteProbability",
    "EvaluatedSample",
    "FilterDivergenceError",
    "FiniteFrame",
    "FrameMismatchError",
    "FusionRule",
    "Gaussian1D",
    "GridDensity1D",
    "InitSpec",
    "LocalPosterior",
    "Measurement",
    "MonteCarloSummary",
    "MotionModel",
    "Particle",
    "ParticleCloud",
    "RunMetrics",
    "ScenarioConfig",
    "Sensor",
    "StateVector4",
    "TrajectorySpec",
    "ZeroWeightError",
    "bayes_fuse_gaussian",
    "bearing",
    "conjunctive_combine",
    "discrete_p_pcr5",
    "discrete_pcr5",
    "feedback",
    "fuse",
    "fuse_bayes",
    "fuse_mean",
    "fuse_pcr5",
    "fuse_whitened",
    "gaussian_pair_grid",
    "gaussian_source",
    "generate_measurements",
    "grid_bayes_fuse",
    "grid_pcr5_fuse",
    "kde_densities",
    "kde_density",
    "likelihood",
    "likelihoods",
    "local_step",
    "mean_fuse_select",
    "pcr5_sample_batch",
    "pcr5_select",
    "predict",
    "run_filter",
    "run_monte_carlo",
    "simulate_truth",
    "systematic_resample",
    "truth_digest",
    "update_weights",
    "weighted_select",
    "wrap_angle",
]
