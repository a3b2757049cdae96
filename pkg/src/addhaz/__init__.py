"""Additive hazards estimation with a hybrid Bayesian coefficient posterior
and a conjugate gamma-mixture posterior for the piecewise baseline hazard."""

from .data_model import (
    BaselineIncrementPosterior,
    BetaPrior,
    FitResult,
    GammaProcessPrior,
    Observation,
    SurvivalDataset,
    TimeGrid,
    grid_from_quantiles,
    interval_index,
    validate_dataset,
)
from .lin_ying import LYEstimate, LYStatistics, compute_statistics, ly_solve, risk_set_mean
from .hybrid_beta import (
    HpdInterval,
    PseudoPosterior,
    beta_mode,
    hpd_interval,
    pseudo_posterior,
    sigma_hat,
    significance_flag,
)
from .poly_coeffs import (
    PolyCoefficients,
    poly_eval_log,
    poly_from_factors,
    poly_init,
    poly_multiply_in,
)
from .baseline_posterior import (
    IntervalSummary,
    event_offsets_by_interval,
    increment_mean,
    increment_posterior,
    increment_variance,
    interval_summaries,
    remark2_check,
)
from .simulate import (
    PiecewiseConstantHazard,
    SimConfig,
    SimReport,
    draw_event_time,
    draw_observation,
    run_baseline_experiment,
    run_beta_experiment,
)
from .fitting import fit
from .dataio import read_dataset_csv, read_transformed_cohort_csv, write_dataset_csv
from . import errors

__version__ = "0.1.0"

__all__ = [
    "BaselineIncrementPosterior",
    "BetaPrior",
    "FitResult",
    "GammaProcessPrior",
    "HpdInterval",
    "IntervalSummary",
    "LYEstimate",
    "LYStatistics",
    "Observation",
    "PiecewiseConstantHazard",
    "PolyCoefficients",
    "PseudoPosterior",
    "SimConfig",
    "SimReport",
    "SurvivalDataset",
    "TimeGrid",
    "beta_mode",
    "compute_statistics",
    "draw_event_time",
    "draw_observation",
    "errors",
    "event_offsets_by_interval",
    "fit",
    "grid_from_quantiles",
    "hpd_interval",
    "increment_mean",
    "increment_posterior",
    "increment_variance",
    "interval_index",
    "interval_summaries",
    "ly_solve",
    "poly_eval_log",
    "poly_from_factors",
    "poly_init",
    "poly_multiply_in",
    "pseudo_posterior",
    "read_dataset_csv",
    "read_transformed_cohort_csv",
    "remark2_check",
    "risk_set_mean",
    "run_baseline_experiment",
    "run_beta_experiment",
    "sigma_hat",
    "significance_flag",
    "validate_dataset",
    "write_dataset_csv",
]
