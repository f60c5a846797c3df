"""Operator-valued random Fourier features for matrix-valued Gaussian kernels."""

from . import bounds, learn, workbench
from .errors import (
    ConvergenceError, DegenerateInputError, InvalidParameterError, OrffError, ResourceError,
    SingularSystemError, StepSizeError, UnsupportedError,
)
from .features import (
    FastOperator, FeatureMap, approx_kernel, build_feature_map, feature_matrix, op_adjoint,
    op_apply, op_normal,
)
from .kernels import Family, KernelSpec, exact_gram, gaussian_signature, signature
from .spectral import (
    FrequencyDraw, SpectralPair, eval_A, eval_B, factor_psd, sample_frequencies, spectral_pair,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DegenerateInputError", "FastOperator", "FeatureMap", "Family",
    "FrequencyDraw", "InvalidParameterError", "KernelSpec", "OrffError", "ResourceError",
    "SingularSystemError", "SpectralPair", "StepSizeError", "UnsupportedError", "approx_kernel",
    "bounds", "build_feature_map", "eval_A", "eval_B", "exact_gram", "factor_psd",
    "feature_matrix", "gaussian_signature", "learn", "op_adjoint", "op_apply", "op_normal",
    "sample_frequencies", "signature", "spectral_pair", "workbench",
]
