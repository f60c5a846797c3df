"""Shift-invariant matrix-valued Gaussian kernels and their exact Gram matrices.

Three families are supported, all built on the scalar Gaussian signature
``k0(delta) = exp(-|delta|^2 / (2 sigma^2))``:

* decomposable: ``K0(delta) = k0(delta) A`` with a fixed PSD ``p x p`` matrix A;
* curl-free:    ``K0(delta) = -Hess k0(delta) = (I/s^2 - dd^T/s^4) k0``;
* div-free:     ``K0(delta) = (Hess - I Lap) k0 = (dd^T/s^4 + ((d-1)/s^2 - |d|^2/s^4) I) k0``.

The last two require ``p == d``.  Each family is normalised so that its
spectral measure is the probability law N(0, sigma^-2 I).
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

_PSD_RTOL = 1e-10
_GRAM_BLOCK_BYTES = 64 * 2**20


class Family(str, enum.Enum):
    DECOMPOSABLE = "dec"
    CURL_FREE = "curl"
    DIV_FREE = "div"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "dec": cls.DECOMPOSABLE, "decomposable": cls.DECOMPOSABLE,
            "curl": cls.CURL_FREE, "curl-free": cls.CURL_FREE, "curlfree": cls.CURL_FREE,
            "div": cls.DIV_FREE, "div-free": cls.DIV_FREE, "divfree": cls.DIV_FREE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameterError(f"unknown kernel family {value!r}") from None


def _validated_psd(A):
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"A must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidParameterError("A has non-finite entries")
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A - A.T).max(initial=0.0) > _PSD_RTOL * max(scale, 1.0):
        raise InvalidParameterError("A must be symmetric")
    A = 0.5 * (A + A.T)
    if scale == 0.0:
        return A
    evals, evecs = np.linalg.eigh(A)
    norm = np.abs(evals).max()
    if evals.min() < -_PSD_RTOL * norm:
        raise InvalidParameterError(
            f"A is not positive semi-definite (min eigenvalue {evals.min():.3e})"
        )
    if evals.min() < 0.0:
        evals = np.clip(evals, 0.0, None)
        A = (evecs * evals) @ evecs.T
        A = 0.5 * (A + A.T)
    return A


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Immutable description of a matrix-valued Gaussian kernel.

    Use the :meth:`decomposable`, :meth:`curl_free` and :meth:`div_free`
    constructors rather than calling the class directly.
    """

    family: Family
    d: int
    p: int
    sigma: float
    A: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        if int(self.d) != self.d or self.d < 1:
            raise InvalidParameterError(f"d must be a positive integer, got {self.d}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidParameterError(f"p must be a positive integer, got {self.p}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", int(self.p))
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma <= 0.0:
            raise InvalidParameterError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "sigma", sigma)
        if family is Family.DECOMPOSABLE:
            if self.A is None:
                raise InvalidParameterError("decomposable kernel requires A")
            A = _validated_psd(self.A)
            if A.shape[0] != self.p:
                raise InvalidParameterError(f"A is {A.shape[0]}x{A.shape[0]} but p={self.p}")
            A.setflags(write=False)
            object.__setattr__(self, "A", A)
        else:
            if self.p != self.d:
                raise InvalidParameterError(
                    f"{family.value}-free kernels need p == d, got d={self.d}, p={self.p}"
                )
            if self.A is not None:
                raise InvalidParameterError("A is only meaningful for decomposable kernels")

    @classmethod
    def decomposable(cls, A, d, sigma):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(Family.DECOMPOSABLE, d, A.shape[0], sigma, A)

    @classmethod
    def curl_free(cls, d, sigma):
        return cls(Family.CURL_FREE, d, d, sigma)

    @classmethod
    def div_free(cls, d, sigma):
        return cls(Family.DIV_FREE, d, d, sigma)

    @classmethod
    def make(cls, family, d, sigma, A=None):
        """Build a spec from a family name; ``A`` defaults to the identity for dec."""
        family = Family.parse(family)
        if family is Family.DECOMPOSABLE:
            if A is None:
                A = np.eye(d)
            return cls.decomposable(A, d, sigma)
        if family is Family.CURL_FREE:
            return cls.curl_free(d, sigma)
        return cls.div_free(d, sigma)

    def to_dict(self):
        out = {"family": self.family.value, "d": self.d, "p": self.p, "sigma": self.sigma}
        if self.A is not None:
            out["A"] = self.A.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(Family.parse(data["family"]), data["d"], data["p"], data["sigma"], data.get("A"))

    def with_sigma(self, sigma):
        return KernelSpec(self.family, self.d, self.p, sigma, self.A)


def _check_delta(delta, d):
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 0 or delta.shape[-1] != d:
        raise InvalidParameterError(f"displacement must have trailing dimension {d}, got {delta.shape}")
    return delta


def gaussian_signature(delta, sigma):
    """Scalar Gaussian signature ``exp(-|delta|^2 / (2 sigma^2))``.

    ``delta`` may be a single vector or an array of vectors stacked along
    the leading axes; the last axis is the input dimension.
    """
    sigma = float(sigma)
    if not sigma > 0.0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    delta = np.asarray(delta, dtype=float)
    sq = np.einsum("...i,...i->...", delta, delta)
    return np.exp(-sq / (2.0 * sigma * sigma))


def signature(spec, delta):
    """Matrix signature ``K0(delta)`` of ``spec``.

    Parameters
    ----------
    spec : KernelSpec
    delta : array_like, shape (..., d)
        One displacement ``x - z`` or a stack of them.

    Returns
    -------
    numpy.ndarray, shape (..., p, p)
    """
    delta = _check_delta(delta, spec.d)
    s2 = spec.sigma**2
    k = gaussian_signature(delta, spec.sigma)[..., None, None]
    if spec.family is Family.DECOMPOSABLE:
        return k * spec.A
    eye = np.eye(spec.d)
    outer = delta[..., :, None] * delta[..., None, :] / s2**2
    if spec.family is Family.CURL_FREE:
        return (eye / s2 - outer) * k
    sq = np.einsum("...i,...i->...", delta, delta)[..., None, None]
    return (outer + ((spec.d - 1) / s2 - sq / s2**2) * eye) * k


def exact_gram(spec, X, Z=None):
    """Block Gram matrix ``[K0(x_i - z_j)]`` of shape ``(N p, M p)``.

    Block ``(i, j)`` occupies rows ``i*p:(i+1)*p`` and columns
    ``j*p:(j+1)*p``.  ``Z`` defaults to ``X``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != spec.d or Z.shape[1] != spec.d:
        raise InvalidParameterError(
            f"inputs must have {spec.d} columns, got {X.shape[1]} and {Z.shape[1]}"
        )
    n, m, p = X.shape[0], Z.shape[0], spec.p
    out = np.empty((n * p, m * p))
    rows = max(1, _GRAM_BLOCK_BYTES // (8 * max(1, m) * (p * p + spec.d)))
    for i0 in range(0, n, rows):
        i1 = min(i0 + rows, n)
        blocks = signature(spec, X[i0:i1, None, :] - Z[None, :, :])
        out[i0 * p:i1 * p] = blocks.transpose(0, 2, 1, 3).reshape((i1 - i0) * p, m * p)
    return out
