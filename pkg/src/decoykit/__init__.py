"""Biased-basis decoy-state QKD analysis.

Simulates the observable statistics of five practical decoy-state
protocols under a linear channel loss model, computes finite-size bounds
on vacuum yields, single-photon yields and error rates, evaluates the
worst-case secure key rate over the feasible vacuum-yield region, and
optimizes all protocol parameters by coordinate descent.
"""
from ._kernel import available_backends, default_backend
from .channel import (
    ChannelParams,
    Observation,
    ObservedStats,
    error_rate_k,
    overall_transmittance,
    sample_observed,
    simulate_observed,
    yield_k,
)
from .config import AnalysisConfig, RunConfig, load_config, resolve_config
from .decoy import (
    AveragedYieldModel,
    BoundSet,
    e1_upper,
    n_k_photons,
    phase_error_upper,
    s0_interval,
    s1_mean_lower,
    s1_mean_lower_pair,
    s1_source_lower,
)
from .errors import (
    AnalysisInfeasibleError,
    DecoyKitError,
    ErrorRateUnboundedError,
    InfeasibleStatisticsError,
    OrderingError,
    ParameterError,
)
from .keyrate import KeyRateReport, binary_entropy, rate_at_s0, worst_case_rate
from .optimizer import OptimizationResult, ParameterBox, evaluate_params, optimize
from .sources import (
    FAMILIES,
    PhotonDistribution,
    ProtocolInstance,
    SourceSpec,
    build_protocol,
    check_order,
    family_free_params,
    poisson_distribution,
    vacuum_distribution,
)
from .stats import FluctuationInterval, lambda_of, sampling_deviation, yield_interval

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AnalysisInfeasibleError",
    "AveragedYieldModel",
    "BoundSet",
    "ChannelParams",
    "DecoyKitError",
    "ErrorRateUnboundedError",
    "FAMILIES",
    "FluctuationInterval",
    "InfeasibleStatisticsError",
    "KeyRateReport",
    "Observation",
    "ObservedStats",
    "OptimizationResult",
    "OrderingError",
    "ParameterBox",
    "ParameterError",
    "PhotonDistribution",
    "ProtocolInstance",
    "RunConfig",
    "SourceSpec",
    "available_backends",
    "binary_entropy",
    "build_protocol",
    "check_order",
    "default_backend",
    "e1_upper",
    "error_rate_k",
    "evaluate_params",
    "family_free_params",
    "lambda_of",
    "load_config",
    "n_k_photons",
    "optimize",
    "overall_transmittance",
    "phase_error_upper",
    "poisson_distribution",
    "rate_at_s0",
    "resolve_config",
    "s0_interval",
    "s1_mean_lower",
    "s1_mean_lower_pair",
    "s1_source_lower",
    "sample_observed",
    "sampling_deviation",
    "simulate_observed",
    "vacuum_distribution",
    "worst_case_rate",
    "yield_interval",
    "yield_k",
]
