"""Spectral pairs ``(A(w), mu)`` and factorisations ``A(w) = B(w) B(w)^T``.

For every Gaussian family the spectral measure is ``mu = N(0, sigma^-2 I_d)``
and the matrix density is

* decomposable: ``A(w) = A``                     (``B`` = rank-revealing factor of A)
* curl-free:    ``A(w) = w w^T``                 (``B(w) = w``, one column)
* div-free:     ``A(w) = |w|^2 I - w w^T``       (``B(w) = |w| (I - u u^T)``, ``u = w/|w|``)

The div-free factor uses that ``I - u u^T`` is an orthogonal projector, so
``(|w| (I - u u^T))^2 = |w|^2 I - w w^T``; no per-sample numerical
decomposition is needed.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidParameterError
from .kernels import Family

_RANK_RTOL = 1e-12
_SYM_RTOL = 1e-10


def factor_psd(A, rtol=_RANK_RTOL):
    """Thin factor ``B`` with ``B @ B.T == A`` and as few columns as the rank.

    Eigenvalues below ``rtol * max|eig|`` are discarded.  Column signs are
    fixed so that the largest-magnitude entry of each column is positive,
    which makes the factor deterministic.

    Parameters
    ----------
    A : array_like, shape (p, p)
        Symmetric positive semi-definite matrix.

    Returns
    -------
    numpy.ndarray, shape (p, r)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {A.shape}")
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A - A.T).max(initial=0.0) > _SYM_RTOL * max(scale, 1.0):
        raise InvalidParameterError("matrix is not symmetric")
    if scale == 0.0:
        return np.zeros((A.shape[0], 0))
    evals, evecs = np.linalg.eigh(0.5 * (A + A.T))
    keep = evals > rtol * np.abs(evals).max()
    B = evecs[:, keep] * np.sqrt(evals[keep])
    # Largest eigenvalue first; the stable sort keeps ties in eigh order so that A = I gives B = I.
    B = B[:, np.argsort(-evals[keep], kind="stable")]
    pivots = np.abs(B).argmax(axis=0)
    signs = np.sign(B[pivots, np.arange(B.shape[1])])
    signs[signs == 0] = 1.0
    return np.ascontiguousarray(B * signs)


@dataclass(frozen=True, eq=False)
class SpectralPair:
    """Spectral description of a kernel spec.

    Attributes
    ----------
    spec : KernelSpec
    pprime : int
        Number of columns of ``B(w)``.
    B_fixed : numpy.ndarray or None
        The constant factor of a decomposable kernel.
    """

    spec: object
    pprime: int
    B_fixed: np.ndarray = field(default=None, repr=False)

    @property
    def frequency_scale(self):
        """Standard deviation of each frequency coordinate (``1/sigma``)."""
        return 1.0 / self.spec.sigma


def spectral_pair(spec):
    """Spectral pair for ``spec``; decomposable kernels are factored once here."""
    if spec.family is Family.DECOMPOSABLE:
        B = factor_psd(spec.A)
        B.setflags(write=False)
        return SpectralPair(spec, B.shape[1], B)
    if spec.family is Family.CURL_FREE:
        return SpectralPair(spec, 1)
    return SpectralPair(spec, spec.d)


@dataclass(frozen=True, eq=False)
class FrequencyDraw:
    """``D`` i.i.d. frequencies ``w_j ~ N(0, sigma^-2 I_d)`` stored as rows."""

    omegas: np.ndarray = field(repr=False)
    seed: int
    sigma: float

    @property
    def D(self):
        return self.omegas.shape[0]

    @property
    def d(self):
        return self.omegas.shape[1]

    def regenerate(self):
        return sample_frequencies(self.D, self.d, self.sigma, self.seed)

    def prefix(self, D):
        """The draw restricted to its first ``D`` frequencies."""
        if not 1 <= D <= self.D:
            raise InvalidParameterError(f"prefix length must lie in [1, {self.D}], got {D}")
        return FrequencyDraw(self.omegas[:D], self.seed, self.sigma)


def sample_frequencies(D, d, sigma, seed):
    """Draw ``D`` frequencies from N(0, sigma^-2 I_d), deterministically in ``seed``.

    Frequency ``j`` is a function of ``(seed, j)`` only, so a draw of size
    ``D`` is the prefix of every larger draw with the same seed.
    """
    if int(D) != D or D < 1:
        raise InvalidParameterError(f"D must be a positive integer, got {D}")
    if int(d) != d or d < 1:
        raise InvalidParameterError(f"d must be a positive integer, got {d}")
    if not float(sigma) > 0.0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    seed = rng.check_seed(seed)
    omegas = rng.standard_normal_rows(seed, int(D), int(d)) / float(sigma)
    omegas.setflags(write=False)
    return FrequencyDraw(omegas, seed, float(sigma))


def _check_omega(pair, omega):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 0 or omega.shape[-1] != pair.spec.d:
        raise InvalidParameterError(
            f"frequency must have trailing dimension {pair.spec.d}, got {omega.shape}"
        )
    return omega


def eval_A(pair, omega):
    """Matrix density ``A(w)``; ``omega`` may be stacked, shape (..., d) -> (..., p, p)."""
    omega = _check_omega(pair, omega)
    spec = pair.spec
    if spec.family is Family.DECOMPOSABLE:
        return np.broadcast_to(spec.A, omega.shape[:-1] + spec.A.shape).copy()
    outer = omega[..., :, None] * omega[..., None, :]
    if spec.family is Family.CURL_FREE:
        return outer
    sq = np.einsum("...i,...i->...", omega, omega)[..., None, None]
    return sq * np.eye(spec.d) - outer


def eval_B(pair, omega):
    """Factor ``B(w)`` with ``B(w) B(w)^T = A(w)``; shape (..., p, p')."""
    omega = _check_omega(pair, omega)
    spec = pair.spec
    if spec.family is Family.DECOMPOSABLE:
        return np.broadcast_to(pair.B_fixed, omega.shape[:-1] + pair.B_fixed.shape).copy()
    if spec.family is Family.CURL_FREE:
        return omega[..., :, None].copy()
    norm = np.sqrt(np.einsum("...i,...i->...", omega, omega))
    safe = np.where(norm > 0.0, norm, 1.0)
    unit = omega / safe[..., None]
    proj = np.eye(spec.d) - unit[..., :, None] * unit[..., None, :]
    return norm[..., None, None] * proj
