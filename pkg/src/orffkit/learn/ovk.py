"""Exact operator-valued kernel ridge regression, the baseline for ORFF models."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import InvalidParameterError, ResourceError, SingularSystemError
from ..kernels import Family, exact_gram, gaussian_signature, signature
from .ridge import solve_stein_eig

MAX_UNKNOWNS = 20000


@dataclass(frozen=True, eq=False)
class ExactOVKModel:
    """``f(x) = sum_i K(x, x_i) alpha_i``."""

    Xtrain: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    spec: object
    lam: float

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.spec.d:
            raise InvalidParameterError(f"points must have {self.spec.d} coordinates, got {X.shape}")
        out = exact_gram(self.spec, X, self.Xtrain) @ self.alpha.ravel()
        out = out.reshape(X.shape[0], self.spec.p)
        return out[0] if single else out


def fit_exact_ovk(spec, X, Y, lam):
    """Solve ``(G + N lam I) vec(alpha) = vec(Y)`` with the exact block Gram ``G``.

    Decomposable kernels reduce to a Stein equation in the scalar Gram and
    ``A``; other families use a dense Cholesky factorisation.

    Raises
    ------
    ResourceError
        If ``N p`` exceeds :data:`MAX_UNKNOWNS`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
    if X.shape[1] != spec.d or Y.shape[1] != spec.p:
        raise InvalidParameterError(f"expected X: N x {spec.d} and Y: N x {spec.p}")
    lam = float(lam)
    if lam < 0 or not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be non-negative, got {lam}")
    n, p = X.shape[0], spec.p
    if n * p > MAX_UNKNOWNS:
        raise ResourceError(f"exact OVK needs an {n * p}-square system; the guard is {MAX_UNKNOWNS}")
    shift = n * lam
    if spec.family is Family.DECOMPOSABLE:
        K = gaussian_signature(X[:, None, :] - X[None, :, :], spec.sigma)
        s, U = np.linalg.eigh(K)
        g, V = np.linalg.eigh(spec.A)
        alpha = solve_stein_eig(U, np.clip(s, 0, None), V, np.clip(g, 0, None), Y, shift)
    else:
        G = exact_gram(spec, X)
        G[np.diag_indices_from(G)] += shift
        try:
            alpha = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G, overwrite_a=True), Y.ravel())
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"Gram system is singular: {exc}") from None
        alpha = alpha.reshape(n, p)
    return ExactOVKModel(X.copy(), alpha, spec, lam)


def single_point_alpha(spec, y, lam):
    """Closed form for one training point: ``(K0(0) + lam I)^{-1} y``."""
    return np.linalg.solve(signature(spec, np.zeros(spec.d)) + lam * np.eye(spec.p), y)
