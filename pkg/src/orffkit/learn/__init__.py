"""Ridge learning with ORFF models, the exact OVK baseline and simplex coding."""

from .ovk import MAX_UNKNOWNS, ExactOVKModel, fit_exact_ovk
from .persist import load_model, model_from_dict, model_to_dict, save_model
from .ridge import (
    METHODS, RidgeModel, SolverConfig, SteinSolver, conjugate_gradient, default_step, fit,
    fit_cg, fit_dense, fit_ridge_path, fit_sgd, fit_stein, predict, predict_batch,
    ridge_gradient, ridge_objective,
)
from .simplex import SimplexCode, simplex_code

__all__ = [
    "MAX_UNKNOWNS", "METHODS", "ExactOVKModel", "RidgeModel", "SimplexCode", "SolverConfig",
    "SteinSolver", "conjugate_gradient", "default_step", "fit", "fit_cg", "fit_dense",
    "fit_exact_ovk", "fit_ridge_path", "fit_sgd", "fit_stein", "load_model", "model_from_dict",
    "model_to_dict", "predict", "predict_batch", "ridge_gradient", "ridge_objective",
    "save_model", "simplex_code",
]
