"""Synthetic data, experiment drivers and the command-line interface."""

from .data import (
    Dataset, curl_field, discrete_curl, div_field, jaakkola_sigma, mixture_potential, read_csv,
    synth_dec, synth_fields, train_test_split, write_csv,
)
from .experiments import (
    SweepResult, loglog_slope, n_grid, power_grid, rmse, run_approx_error, run_field_comparison,
    run_learning_curve, run_timing, run_variance,
)

__all__ = [
    "Dataset", "SweepResult", "curl_field", "discrete_curl", "div_field", "jaakkola_sigma",
    "loglog_slope", "mixture_potential", "n_grid", "power_grid", "read_csv", "rmse",
    "run_approx_error", "run_field_comparison", "run_learning_curve", "run_timing",
    "run_variance", "synth_dec", "synth_fields", "train_test_split", "write_csv",
]
