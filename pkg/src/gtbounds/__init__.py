"""Converse bounds and Monte Carlo simulation for noisy non-adaptive
group testing."""

from .channels import Channel, NoiseModelSpec, make_channel, sample_output
from .infomath import (
    BinomialSpec,
    Distribution,
    HypergeometricSpec,
    binomial_pmf,
    conditional_mi,
    conditional_mi_bernoulli_design,
    entropy,
    hypergeometric_pmf,
    kl_divergence,
    log_binom,
    tv_distance,
)
from .simulator import (
    EnsembleSpec,
    MeasurementMatrix,
    SimEstimate,
    SweepResult,
    crossing_n,
    estimate_pe,
    estimate_pe_ensemble,
    gen_matrix,
    info_density_decoder,
    load_matrix,
    map_decoder,
    sample_observations,
    save_matrix,
    sweep_n,
)
from .thresholds import (
    CapacityResult,
    ChebyshevBound,
    InfoDensityMoments,
    MixtureProfile,
    ThresholdResult,
    capacity_output_dist,
    chebyshev_error_lower_bound,
    delta_ell,
    i_star,
    info_density_moments,
    mixture_threshold,
    optimize_mixture_threshold,
    strong_converse_threshold,
    weak_converse_threshold,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
