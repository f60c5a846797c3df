"""Real operator-valued random Fourier feature maps and matrix-free operators.

Layout conventions
------------------
The real feature map of a point ``x`` is the ``(2 D p') x p`` matrix::

    Phi(x) = 1/sqrt(D) * [cos<x,w_1> B(w_1)^T; ...; cos<x,w_D> B(w_D)^T;
                          sin<x,w_1> B(w_1)^T; ...; sin<x,w_D> B(w_D)^T]

reordered so that a parameter vector ``theta`` of length ``2 D p'`` is the
column-major vectorisation of a ``(2D) x p'`` coefficient block ``Theta``
whose rows are ``[cos_1 .. cos_D, sin_1 .. sin_D]``.  Row ``r + 2D c`` of
``Phi(x)`` therefore multiplies ``Theta[r, c]``.

With ``F(X)`` the ``N x 2D`` matrix of scaled cosines and sines (the scalar
random Fourier features) and ``lift(Theta)`` the ``2D x p`` block whose row
``r`` is ``B(w_j(r)) Theta[r]``, the model output is simply
``F(X) @ lift(Theta)``; the adjoint is ``lower(F(X)^T Y)`` with
``lower`` applying ``B(w_j)^T`` row-wise.  Every family only has to provide
``lift`` and ``lower``; both cost O(D p p') or better.
"""

import numpy as np

from . import _parallel
from .errors import InvalidParameterError
from .kernels import Family
from .spectral import eval_A, eval_B, sample_frequencies, spectral_pair

_ROW_CHUNK = 4096
_CHUNK_ENTRIES = 1 << 22  # bound on a scalar-feature block, ~32 MiB
_CACHE_LIMIT = 1 << 24  # cached feature entries (~128 MiB) for bound operators


def _tree_sum(parts):
    parts = list(parts)
    while len(parts) > 1:
        paired = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            paired.append(parts[-1])
        parts = paired
    return parts[0]


class FeatureMap:
    """Sampled ORFF map for a kernel spec.

    Instances are immutable after construction and safe to share between
    threads.  Build them with :func:`build_feature_map`.
    """

    def __init__(self, spec, draw):
        if draw.d != spec.d:
            raise InvalidParameterError(f"draw has d={draw.d} but spec has d={spec.d}")
        if draw.sigma != spec.sigma:
            raise InvalidParameterError("draw bandwidth differs from the kernel bandwidth")
        self.spec = spec
        self.pair = spectral_pair(spec)
        self.draw = draw
        if self.pair.pprime == 0:
            raise InvalidParameterError("output matrix A is zero; the feature map is empty")
        om = draw.omegas
        self._om2 = np.concatenate([om, om], axis=0)
        if spec.family is Family.DIV_FREE:
            norms = np.sqrt(np.einsum("ij,ij->i", om, om))
            safe = np.where(norms > 0.0, norms, 1.0)
            norms2 = np.concatenate([norms, norms])
            units = self._om2 / np.concatenate([safe, safe])[:, None]
            self._norms2, self._units2 = norms2, units
        if spec.family is not Family.DECOMPOSABLE:
            self._outer = (om[:, :, None] * om[:, None, :]).reshape(self.D, -1)
            self._sqnorm = np.einsum("ij,ij->i", om, om)

    # -- sizes ------------------------------------------------------------
    @property
    def D(self):
        return self.draw.D

    @property
    def d(self):
        return self.spec.d

    @property
    def p(self):
        return self.spec.p

    @property
    def pprime(self):
        return self.pair.pprime

    @property
    def omegas(self):
        return self.draw.omegas

    @property
    def feature_dim(self):
        return 2 * self.D * self.pprime

    @property
    def seed(self):
        return self.draw.seed

    def prefix(self, D):
        """Feature map using only the first ``D`` sampled frequencies."""
        return FeatureMap(self.spec, self.draw.prefix(D))

    # -- checks -----------------------------------------------------------
    def _points(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise InvalidParameterError(f"points must have {self.d} coordinates, got shape {X.shape}")
        return X, single

    def theta_block(self, theta):
        """Reshape a flat parameter vector into the ``(2D, p')`` block ``Theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape == (2 * self.D, self.pprime):
            return theta
        if theta.shape != (self.feature_dim,):
            raise InvalidParameterError(
                f"theta must have length {self.feature_dim}, got shape {theta.shape}"
            )
        return theta.reshape((2 * self.D, self.pprime), order="F")

    @staticmethod
    def theta_vector(Theta):
        """Column-major vectorisation, the inverse of :meth:`theta_block`."""
        return np.asarray(Theta).ravel(order="F")

    # -- scalar features --------------------------------------------------
    def scalar_features(self, X):
        """``F(X)``: scaled ``[cos <x,w_j>, sin <x,w_j>]``, shape ``(N, 2D)``."""
        X, _ = self._points(X)
        phase = X @ self.omegas.T
        scale = 1.0 / np.sqrt(self.D)
        return np.concatenate([np.cos(phase), np.sin(phase)], axis=1) * scale

    # -- family-specific B actions ----------------------------------------
    def lift(self, Theta):
        """Row-wise ``B(w_j) Theta[r]``: ``(2D, p') -> (2D, p)``."""
        family = self.spec.family
        if family is Family.DECOMPOSABLE:
            return Theta @ self.pair.B_fixed.T
        if family is Family.CURL_FREE:
            return Theta[:, :1] * self._om2
        u = self._units2
        along = np.einsum("ij,ij->i", u, Theta)
        return self._norms2[:, None] * (Theta - along[:, None] * u)

    def lower(self, G):
        """Row-wise ``B(w_j)^T G[r]``: ``(2D, p) -> (2D, p')``."""
        family = self.spec.family
        if family is Family.DECOMPOSABLE:
            return G @ self.pair.B_fixed
        if family is Family.CURL_FREE:
            return np.einsum("ij,ij->i", G, self._om2)[:, None]
        # B(w) is symmetric for the div-free family.
        return self.lift(G)

    # -- dense route ------------------------------------------------------
    def feature_matrix(self, x):
        """Dense ``Phi(x)`` of shape ``(2 D p', p)``."""
        x, single = self._points(x)
        if not single:
            raise InvalidParameterError("feature_matrix takes a single point")
        f = self.scalar_features(x)[0]
        B = eval_B(self.pair, self.omegas)
        B2 = np.concatenate([B, B], axis=0)  # (2D, p, p')
        blocks = f[:, None, None] * B2
        return blocks.transpose(2, 0, 1).reshape(self.feature_dim, self.p)

    def design_matrix(self, X):
        """Stacked ``Phi(x_i)^T`` rows: shape ``(N p, 2 D p')``, point-major."""
        X, _ = self._points(X)
        F = self.scalar_features(X)
        B = eval_B(self.pair, self.omegas)
        B2 = np.concatenate([B, B], axis=0)  # (2D, p, p')
        # out[i, a, c, r] = F[i, r] * B2[r, a, c]
        out = np.einsum("ir,rac->iacr", F, B2)
        return out.reshape(X.shape[0] * self.p, self.feature_dim)

    # -- kernel estimator -------------------------------------------------
    def approx_signature(self, delta):
        """``(1/D) sum_j cos<delta, w_j> A(w_j)`` for one or many displacements."""
        delta = np.asarray(delta, dtype=float)
        if delta.ndim == 0 or delta.shape[-1] != self.d:
            raise InvalidParameterError(f"displacement must have {self.d} coordinates")
        lead = delta.shape[:-1]
        flat = delta.reshape(-1, self.d)
        c = np.cos(flat @ self.omegas.T)
        D, p = self.D, self.p
        family = self.spec.family
        if family is Family.DECOMPOSABLE:
            out = c.mean(axis=1)[:, None, None] * self.spec.A
        else:
            curl = (c @ self._outer).reshape(-1, p, p) / D
            if family is Family.CURL_FREE:
                out = curl
            else:
                trace = (c @ self._sqnorm) / D
                out = trace[:, None, None] * np.eye(p) - curl
        return out.reshape(lead + (p, p))

    def approx_kernel(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return self.approx_signature(x - z)

    def approx_gram(self, X):
        """Block matrix ``[Ktilde(x_i, x_j)]`` built from the design matrix."""
        Phi = self.design_matrix(X)
        return Phi @ Phi.T

    def mean_density(self):
        """``(1/D) sum_j A(w_j)``, which equals ``Phi(x)^T Phi(x)`` for every x."""
        return eval_A(self.pair, self.omegas).mean(axis=0)


def build_feature_map(spec, D, seed):
    """Sample ``D`` frequencies for ``spec`` and build the feature map."""
    draw = sample_frequencies(D, spec.d, spec.sigma, seed)
    return FeatureMap(spec, draw)


class FastOperator:
    """Matrix-free ``P_x: theta -> Phi(x)^T theta`` with adjoint and normal map.

    All three methods accept a single point (shape ``(d,)``) or a batch
    (shape ``(N, d)``).  For a batch, :meth:`apply` returns one output row
    per point and :meth:`adjoint` returns the sum over points.
    """

    def __init__(self, fmap):
        self.fmap = fmap
        self._rows = max(1, min(_ROW_CHUNK, _CHUNK_ENTRIES // (2 * fmap.D)))

    def _single(self, F, Theta):
        if self.fmap.spec.family is Family.DECOMPOSABLE:
            return (F @ Theta) @ self.fmap.pair.B_fixed.T
        return F @ self.fmap.lift(Theta)

    def _apply_rows(self, X, M):
        """``F(X) @ M`` without materialising ``F``: the cos and sin halves are
        applied separately and the ``1/sqrt(D)`` scale goes on the small result."""
        D = self.fmap.D
        phase = X @ self.fmap.omegas.T
        return (np.cos(phase) @ M[:D] + np.sin(phase) @ M[D:]) * (1.0 / np.sqrt(D))

    def apply(self, X, theta):
        fmap = self.fmap
        X, single = fmap._points(X)
        Theta = fmap.theta_block(theta)
        if fmap.spec.family is Family.DECOMPOSABLE:
            B = fmap.pair.B_fixed

            def part(sl):
                return self._apply_rows(X[sl], Theta) @ B.T
        else:
            M = fmap.lift(Theta)

            def part(sl):
                return self._apply_rows(X[sl], M)
        if len(X) <= self._rows:
            out = part(slice(None))
        else:
            out = np.concatenate(_parallel.ordered_map(part, _parallel.chunks(len(X), self._rows)))
        return out[0] if single else out

    def adjoint(self, X, Y):
        fmap = self.fmap
        X, single = fmap._points(X)
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape != (X.shape[0], fmap.p):
            raise InvalidParameterError(f"outputs must have shape {(X.shape[0], fmap.p)}, got {Y.shape}")
        if fmap.spec.family is Family.DECOMPOSABLE:
            YB = Y @ fmap.pair.B_fixed

            def part(sl):
                return fmap.scalar_features(X[sl]).T @ YB[sl]
            Theta = _tree_sum(_parallel.ordered_map(part, _parallel.chunks(len(X), self._rows)))
        else:
            def part(sl):
                return fmap.scalar_features(X[sl]).T @ Y[sl]
            G = _tree_sum(_parallel.ordered_map(part, _parallel.chunks(len(X), self._rows)))
            Theta = fmap.lower(G)
        return fmap.theta_vector(Theta)

    def normal(self, X, theta):
        """``sum_i P_{x_i}^* P_{x_i} theta``."""
        X, _ = self.fmap._points(X)
        return self.adjoint(X, self.apply(X, theta))

    def bind(self, X):
        """Operator restricted to a fixed data set, caching its scalar features."""
        return BoundOperator(self, X)


class BoundOperator:
    """``P_X`` for a fixed training set; used by the iterative solvers."""

    def __init__(self, fast, X):
        self.fast = fast
        self.fmap = fast.fmap
        X, _ = self.fmap._points(X)
        self.X = X
        self.n = X.shape[0]
        self._F = None
        if self.n * 2 * self.fmap.D <= _CACHE_LIMIT:
            self._F = self.fmap.scalar_features(X)

    def apply(self, theta):
        if self._F is None:
            return self.fast.apply(self.X, theta)
        return self.fast._single(self._F, self.fmap.theta_block(theta))

    def adjoint(self, Y):
        if self._F is None:
            return self.fast.adjoint(self.X, Y)
        fmap = self.fmap
        Y = np.asarray(Y, dtype=float).reshape(self.n, fmap.p)
        if fmap.spec.family is Family.DECOMPOSABLE:
            return fmap.theta_vector(self._F.T @ (Y @ fmap.pair.B_fixed))
        return fmap.theta_vector(fmap.lower(self._F.T @ Y))

    def normal(self, theta):
        return self.adjoint(self.apply(theta))


def feature_matrix(fmap, x):
    return fmap.feature_matrix(x)


def approx_kernel(fmap, x, z):
    return fmap.approx_kernel(x, z)


def op_apply(fast, x, theta):
    return fast.apply(x, theta)


def op_adjoint(fast, x, y):
    return fast.adjoint(x, y)


def op_normal(fast, X, theta):
    return fast.normal(X, theta)
