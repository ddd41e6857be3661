"""Simulation and estimation toolkit for particle-beam microscopy under
time-varying beam current.

The sample's secondary-electron yield is imaged while the beam current
drifts, so each pixel's incident dose is a correlated random quantity
rather than a known constant. This package synthesizes that situation
end to end (yield truth, AR(1) dose trace, compound-Poisson counts) and
recovers both unknowns: per-pixel yield estimators of increasing
sophistication, a sequential linear filter for the dose trace, and an
alternating scheme that feeds each estimate back into the other.
"""

from .acquisition import (AggregatedMeasurement, TRMeasurement, YieldImage,
                          acquire_time_resolved, aggregate, count_histogram)
from .alternating import (AlternatingConfig, AlternatingResult,
                          convergence_metric, run_alternating)
from .beam_model import (ARParams, DoseField, ar_params_from_spec,
                         generate_dose_field, prior_step_moments)
from .config import ConfigError, ExperimentConfig, load_config
from .dft_nulling import NullingParams, ft_nulling, tune_nulling
from .distributions import (NeymanParams, lambert_w0, neyman_log_pmf,
                            neyman_moments, sample_neyman, sample_poisson)
from .estimators import (EtaGrid, baseline_eta, lambda_reference, lqm_eta,
                         oracle_eta, qm_eta, trml_eta)
from .metrics import (EstimatorReport, ReportRow, analytic_baseline_mse,
                      build_report, excess_mse, excess_percent, image_mse,
                      masked_dose_mse, pointwise_bias_variance)
from .sequential_filter import (FilterNoiseParams, MseTable, build_mse_table,
                                filter_step, ideal_filter_step,
                                run_filter_pass, select_sigma_eps,
                                select_sigma_gamma)
from .synthetic import TRUTH_KINDS, make_truth

__version__ = "0.1.0"

__all__ = [
    "AggregatedMeasurement", "TRMeasurement", "YieldImage",
    "acquire_time_resolved", "aggregate", "count_histogram",
    "AlternatingConfig", "AlternatingResult", "convergence_metric",
    "run_alternating",
    "ARParams", "DoseField", "ar_params_from_spec", "generate_dose_field",
    "prior_step_moments",
    "ConfigError", "ExperimentConfig", "load_config",
    "NullingParams", "ft_nulling", "tune_nulling",
    "NeymanParams", "lambert_w0", "neyman_log_pmf", "neyman_moments",
    "sample_neyman", "sample_poisson",
    "EtaGrid", "baseline_eta", "lambda_reference", "lqm_eta", "oracle_eta",
    "qm_eta", "trml_eta",
    "EstimatorReport", "ReportRow", "analytic_baseline_mse", "build_report",
    "excess_mse", "excess_percent", "image_mse", "masked_dose_mse",
    "pointwise_bias_variance",
    "FilterNoiseParams", "MseTable", "build_mse_table", "filter_step",
    "ideal_filter_step", "run_filter_pass", "select_sigma_eps",
    "select_sigma_gamma",
    "TRUTH_KINDS", "make_truth",
    "__version__",
]
