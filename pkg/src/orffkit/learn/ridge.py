"""Ridge regression on ORFF models.

All solvers minimise the same objective::

    J(theta) = (1/N) sum_i |Phi(x_i)^T theta - y_i|^2 + lam |theta|^2

whose stationarity condition is ``(P_X^* P_X + N lam I) theta = P_X^* y``.
For a decomposable kernel ``theta = vec(Theta)`` and the condition becomes
the Stein equation ``S Theta G + N lam Theta = C`` with ``S = F^T F``,
``G = B^T B`` and ``C = F^T Y B`` (``F`` the ``N x 2D`` scalar features).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .. import rng
from ..errors import (
    ConvergenceError, InvalidParameterError, ResourceError, SingularSystemError, StepSizeError,
    UnsupportedError,
)
from ..features import FastOperator
from ..kernels import Family

METHODS = ("stein", "cg", "sgd", "dense")
_SGD_CHUNK = 1024
MAX_DENSE_UNKNOWNS = 20000


@dataclass(frozen=True)
class SolverConfig:
    """Solver choice and its knobs.

    ``max_iter=None`` lets CG run up to ten times the parameter count, and
    ``eta0=None`` picks the SGD base step from the data (see :func:`fit_sgd`).
    """

    method: str = "cg"
    tol: float = 1e-8
    max_iter: int = None
    eta0: float = None
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tol > 0:
            raise InvalidParameterError(f"tol must be positive, got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be positive, got {self.max_iter}")
        if self.eta0 is not None and not self.eta0 > 0:
            raise InvalidParameterError(f"eta0 must be positive, got {self.eta0}")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be positive, got {self.epochs}")
        rng.check_seed(self.seed)


@dataclass(frozen=True, eq=False)
class RidgeModel:
    """Fitted ORFF model ``f(x) = Phi(x)^T vec(Theta)``."""

    fmap: object
    Theta: np.ndarray = field(repr=False)
    lam: float
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        shape = (2 * self.fmap.D, self.fmap.pprime)
        if self.Theta.shape != shape:
            raise InvalidParameterError(f"Theta must have shape {shape}, got {self.Theta.shape}")
        Theta = np.array(self.Theta, dtype=float)
        Theta.setflags(write=False)
        object.__setattr__(self, "Theta", Theta)

    @property
    def theta(self):
        return self.fmap.theta_vector(self.Theta)

    @property
    def spec(self):
        return self.fmap.spec

    def predict(self, x):
        return FastOperator(self.fmap).apply(x, self.Theta)


def _check_data(fmap, X, Y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[1] != fmap.d:
        raise InvalidParameterError(f"X must be N x {fmap.d}, got {X.shape}")
    if Y.shape != (X.shape[0], fmap.p):
        raise InvalidParameterError(f"Y must be {X.shape[0]} x {fmap.p}, got {Y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidParameterError("data contain non-finite values")
    return X, Y


def _check_lam(lam, allow_zero=False):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0 or (lam == 0 and not allow_zero):
        raise InvalidParameterError(f"lambda must be {'non-negative' if allow_zero else 'positive'}, got {lam}")
    return lam


def ridge_objective(fmap, X, Y, theta, lam):
    """``J(theta)`` evaluated with the fast operator."""
    X, Y = _check_data(fmap, X, Y)
    r = FastOperator(fmap).apply(X, theta) - Y
    th = fmap.theta_vector(fmap.theta_block(theta))
    return float(np.sum(r * r) / X.shape[0] + lam * th @ th)


def ridge_gradient(fmap, X, Y, theta, lam):
    """``grad J = (2/N) P_X^* (P_X theta - y) + 2 lam theta`` as a flat vector."""
    X, Y = _check_data(fmap, X, Y)
    op = FastOperator(fmap)
    th = fmap.theta_vector(fmap.theta_block(theta))
    return 2.0 * op.adjoint(X, op.apply(X, th) - Y) / X.shape[0] + 2.0 * lam * th


def _objective_bound(bound, Y, theta, lam):
    r = bound.apply(theta) - Y
    return float(np.sum(r * r) / bound.n + lam * theta @ theta)


# -- Stein equation ---------------------------------------------------------

def solve_stein_eig(U, s, V, g, C, shift):
    """Solve ``S X G + shift X = C`` given ``S = U diag(s) U^T``, ``G = V diag(g) V^T``."""
    denom = s[:, None] * g[None, :] + shift
    if np.any(denom <= 1e-14 * max(1.0, np.abs(denom).max())):
        raise SingularSystemError("Stein operator is singular; use a positive lambda")
    return U @ ((U.T @ C @ V) / denom) @ V.T


class SteinSolver:
    """Eigendecomposition cache for repeated decomposable ridge solves.

    ``S`` and ``G`` are diagonalised once; each :meth:`solve` then costs a
    few ``2D x 2D`` products, which makes regularisation paths cheap.
    """

    def __init__(self, fmap, X, Y):
        if fmap.spec.family is not Family.DECOMPOSABLE:
            raise UnsupportedError("the Stein solver needs a decomposable kernel")
        X, Y = _check_data(fmap, X, Y)
        self.fmap = fmap
        self.n = X.shape[0]
        F = fmap.scalar_features(X)
        B = fmap.pair.B_fixed
        self.S = F.T @ F
        self.G = B.T @ B
        self.C = F.T @ (Y @ B)
        self._s, self._U = np.linalg.eigh(self.S)
        self._g, self._V = np.linalg.eigh(self.G)
        self._s = np.clip(self._s, 0.0, None)

    def solve(self, lam):
        lam = _check_lam(lam, allow_zero=True)
        return solve_stein_eig(self._U, self._s, self._V, self._g, self.C, self.n * lam)

    def residual(self, Theta, lam):
        """``|S Theta G + N lam Theta - C|_F``."""
        return float(np.linalg.norm(self.S @ Theta @ self.G + self.n * lam * Theta - self.C))


def fit_stein(fmap, X, Y, lam, config=None):
    """Closed-form decomposable ridge fit through the Stein equation.

    Raises
    ------
    UnsupportedError
        If the kernel is not decomposable.
    SingularSystemError
        If ``lam == 0`` and the system has no unique solution.
    """
    lam = _check_lam(lam, allow_zero=True)
    solver = SteinSolver(fmap, X, Y)
    Theta = solver.solve(lam)
    res = solver.residual(Theta, lam)
    c_norm = float(np.linalg.norm(solver.C))
    return RidgeModel(fmap, Theta, lam, {
        "method": "stein", "residual": res, "relative_residual": res / c_norm if c_norm else 0.0,
    })


# -- conjugate gradient -----------------------------------------------------

def conjugate_gradient(matvec, b, x0=None, tol=1e-8, max_iter=None):
    """Conjugate gradient for a symmetric positive definite operator.

    Parameters
    ----------
    matvec : callable
        ``v -> A v``.
    b : numpy.ndarray
    x0 : numpy.ndarray, optional
        Initial iterate, zero by default.
    tol : float
        Stop once ``|b - A x| <= tol |b|``.
    max_iter : int, optional
        Defaults to ``10 * len(b)``.

    Returns
    -------
    x : numpy.ndarray
    info : dict
        ``iterations``, ``residual`` (relative) and ``converged``.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    max_iter = 10 * n if max_iter is None else int(max_iter)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), {"iterations": 0, "residual": 0.0, "converged": True}
    r = b - matvec(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = float(r @ r)
    it = 0
    while np.sqrt(rr) > tol * b_norm and it < max_iter:
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SingularSystemError("operator is not positive definite along the search direction")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    rel = np.sqrt(rr) / b_norm
    return x, {"iterations": it, "residual": float(rel), "converged": bool(rel <= tol)}


def fit_cg(fmap, X, Y, lam, config=None):
    """Matrix-free ridge fit by CG on ``(P^*P + N lam I) theta = P^* y``.

    Raises
    ------
    ConvergenceError
        If the relative residual is still above ``config.tol`` after
        ``config.max_iter`` iterations; carries the final residual.
    """
    config = config or SolverConfig("cg")
    lam = _check_lam(lam)
    X, Y = _check_data(fmap, X, Y)
    bound = FastOperator(fmap).bind(X)
    shift = X.shape[0] * lam
    b = bound.adjoint(Y)
    theta, info = conjugate_gradient(
        lambda v: bound.normal(v) + shift * v, b, tol=config.tol, max_iter=config.max_iter,
    )
    if not info["converged"]:
        raise ConvergenceError(
            f"CG stopped at relative residual {info['residual']:.3e} after {info['iterations']} iterations",
            residual=info["residual"], iterations=info["iterations"],
        )
    info.update(method="cg", objective=_objective_bound(bound, Y, theta, lam))
    return RidgeModel(fmap, fmap.theta_block(theta).copy(), lam, info)


# -- stochastic gradient ----------------------------------------------------

def default_step(fmap, lam):
    """Base step ``1 / (|Phi(x)^T Phi(x)|_2 + lam)``.

    ``Phi(x)^T Phi(x) = (1/D) sum_j A(w_j)`` does not depend on ``x``, so this
    is the inverse smoothness constant of every per-sample loss.
    """
    return 1.0 / (np.linalg.norm(fmap.mean_density(), 2) + lam)


def fit_sgd(fmap, X, Y, lam, config=None):
    """Single-sample SGD with step ``eta_t = eta0 / (1 + eta0 lam t)``.

    Each epoch visits the samples in an order drawn from the substream
    ``(seed, "epoch", e)``.  The returned parameters are the average of the
    iterates over the last epoch, which removes most of the step-size noise
    floor of the final iterate.

    Raises
    ------
    StepSizeError
        If the objective exceeds ten times its value at ``theta = 0``.
    """
    config = config or SolverConfig("sgd")
    lam = _check_lam(lam, allow_zero=True)
    X, Y = _check_data(fmap, X, Y)
    n, p = X.shape[0], fmap.p
    eta0 = default_step(fmap, lam) if config.eta0 is None else float(config.eta0)
    bound = FastOperator(fmap).bind(X)
    theta = np.zeros(fmap.feature_dim)
    initial = _objective_bound(bound, Y, theta, lam)
    history = [initial]
    t = 0
    for epoch in range(config.epochs):
        order = rng.substream(config.seed, "epoch", epoch).permutation(n)
        last = epoch == config.epochs - 1
        avg = np.zeros_like(theta)
        for sl in _chunks(n):
            idx = order[sl]
            Phi = fmap.design_matrix(X[idx])
            for k, i in enumerate(idx):
                rows = Phi[k * p:(k + 1) * p]
                eta = eta0 / (1.0 + eta0 * lam * t)
                grad = rows.T @ (rows @ theta - Y[i]) + lam * theta
                theta = theta - eta * grad
                t += 1
                if last:
                    avg += theta
        if last:
            theta = avg / n
        obj = _objective_bound(bound, Y, theta, lam)
        history.append(obj)
        if not np.isfinite(obj) or obj > 10.0 * max(initial, np.finfo(float).tiny):
            raise StepSizeError(
                f"SGD diverged at epoch {epoch} (objective {obj:.3e}, initial {initial:.3e}); lower eta0",
                residual=obj, iterations=t,
            )
    return RidgeModel(fmap, fmap.theta_block(theta).copy(), lam, {
        "method": "sgd", "eta0": eta0, "iterations": t, "objective": history[-1], "history": history,
    })


def _chunks(n):
    return [slice(i, min(i + _SGD_CHUNK, n)) for i in range(0, n, _SGD_CHUNK)]


# -- dense reference --------------------------------------------------------

def fit_dense(fmap, X, Y, lam, config=None):
    """Materialise the design matrix and solve the normal equations directly.

    Raises
    ------
    ResourceError
        If the parameter count exceeds :data:`MAX_DENSE_UNKNOWNS`.
    """
    lam = _check_lam(lam, allow_zero=True)
    X, Y = _check_data(fmap, X, Y)
    if fmap.feature_dim > MAX_DENSE_UNKNOWNS:
        raise ResourceError(
            f"dense solve needs a {fmap.feature_dim}-square system; the guard is {MAX_DENSE_UNKNOWNS}"
        )
    Phi = fmap.design_matrix(X)
    M = Phi.T @ Phi
    M[np.diag_indices_from(M)] += X.shape[0] * lam
    try:
        theta = scipy.linalg.solve(M, Phi.T @ Y.ravel(), assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are singular: {exc}") from None
    return RidgeModel(fmap, fmap.theta_block(theta).copy(), lam, {"method": "dense"})


def fit_ridge_path(fmap, X, Y, lams):
    """Models for several regularisation values from one SVD of the design matrix."""
    X, Y = _check_data(fmap, X, Y)
    lams = [_check_lam(lam) for lam in lams]
    U, s, Vt = scipy.linalg.svd(fmap.design_matrix(X), full_matrices=False)
    proj = U.T @ Y.ravel()
    out = []
    for lam in lams:
        theta = Vt.T @ (s * proj / (s * s + X.shape[0] * lam))
        out.append(RidgeModel(fmap, fmap.theta_block(theta).copy(), lam, {"method": "svd-path"}))
    return out


_DISPATCH = {"stein": fit_stein, "cg": fit_cg, "sgd": fit_sgd, "dense": fit_dense}


def fit(fmap, X, Y, lam, config=None):
    """Fit with the solver named by ``config.method``."""
    config = config or SolverConfig()
    return _DISPATCH[config.method](fmap, X, Y, lam, config)


def predict(model, x):
    """Prediction for one point (shape ``(p,)``) or a batch (shape ``(N, p)``)."""
    return model.predict(x)


def predict_batch(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return model.predict(X)
