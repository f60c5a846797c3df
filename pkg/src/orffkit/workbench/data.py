"""Synthetic data sets, bandwidth heuristic, splitting and CSV I/O."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import ortho_group

from .. import rng
from ..errors import InvalidParameterError
from ..features import FastOperator, build_feature_map
from ..kernels import KernelSpec

FIELD_BANDWIDTH = 0.3
FIELD_CENTERS = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]])
FIELD_AMPLITUDES = np.array([1.0, 1.0, 1.0, -1.0, -1.0])
FIELD_DOMAIN = 2.0
MAX_PAIRS = 10**6


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[0] != Y.shape[0]:
            raise InvalidParameterError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidParameterError("data set contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def p(self):
        return self.Y.shape[1]

    def subset(self, idx):
        return Dataset(self.X[idx], self.Y[idx], dict(self.meta))


# -- vector fields ----------------------------------------------------------

def mixture_potential(X):
    """Scalar mixture of five Gaussians whose gradient is the curl-free field."""
    X = np.atleast_2d(X)
    diff = X[:, None, :] - FIELD_CENTERS[None]
    g = np.exp(-np.sum(diff**2, axis=2) / (2 * FIELD_BANDWIDTH**2))
    return g @ FIELD_AMPLITUDES


def curl_field(X):
    """Analytic gradient of :func:`mixture_potential`, shape (N, 2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    diff = X[:, None, :] - FIELD_CENTERS[None]
    g = np.exp(-np.sum(diff**2, axis=2) / (2 * FIELD_BANDWIDTH**2)) * FIELD_AMPLITUDES
    return -np.einsum("nk,nkj->nj", g, diff) / FIELD_BANDWIDTH**2


def div_field(X):
    """The curl-free field rotated by 90 degrees: ``(v1, v2) -> (-v2, v1)``."""
    v = curl_field(X)
    return np.stack([-v[:, 1], v[:, 0]], axis=1)


def synth_fields(n, noise_sd=0.0, seed=0):
    """Curl-free and divergence-free samples on the same uniform inputs.

    Returns
    -------
    (Dataset, Dataset)
        The curl-free and the divergence-free data sets.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n}")
    if noise_sd < 0:
        raise InvalidParameterError(f"noise_sd must be non-negative, got {noise_sd}")
    n = int(n)
    X = rng.substream(seed, "fields", "inputs").uniform(-FIELD_DOMAIN, FIELD_DOMAIN, size=(n, 2))
    out = []
    for name, fn in (("curl-field", curl_field), ("div-field", div_field)):
        Y = fn(X)
        if noise_sd > 0:
            Y = Y + noise_sd * rng.substream(seed, "fields", "noise", name).standard_normal(Y.shape)
        meta = {"name": name, "seed": seed, "noise": {"kind": "isotropic", "sd": noise_sd},
                "bandwidth": FIELD_BANDWIDTH}
        out.append(Dataset(X, Y, meta))
    return tuple(out)


def discrete_curl(field_fn, grid_n=50, h=1e-3, half_width=FIELD_DOMAIN):
    """``d v2/dx1 - d v1/dx2`` by central differences on a ``grid_n x grid_n`` grid."""
    t = np.linspace(-half_width, half_width, grid_n)
    P = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    dv2 = (field_fn(P + e1)[:, 1] - field_fn(P - e1)[:, 1]) / (2 * h)
    dv1 = (field_fn(P + e2)[:, 0] - field_fn(P - e2)[:, 0]) / (2 * h)
    return (dv2 - dv1).reshape(grid_n, grid_n)


# -- bandwidth heuristic -----------------------------------------------------

def jaakkola_sigma(X, seed=0):
    """Median pairwise Euclidean distance.

    Above :data:`MAX_PAIRS` pairs the median is taken over that many pairs
    drawn uniformly from the substream ``(seed, "jaakkola")``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise InvalidParameterError("the median heuristic needs at least two points")
    if n * (n - 1) // 2 <= MAX_PAIRS:
        return float(np.median(pdist(X)))
    g = rng.substream(seed, "jaakkola")
    i = g.integers(0, n, MAX_PAIRS)
    j = (i + g.integers(1, n, MAX_PAIRS)) % n  # j != i
    return float(np.median(np.linalg.norm(X[i] - X[j], axis=1)))


# -- decomposable benchmark ---------------------------------------------------

def synth_dec(N, D_gen=10_000, noisy=False, seed=0, d=20, p=20):
    """Outputs of a random rank-one decomposable ORFF model.

    Inputs are uniform on ``[-1, 1]^d``; ``A = a a^T / |a|^2``; the bandwidth
    is the median heuristic on the inputs and the ``2 D_gen`` coefficients are
    uniform on ``[-1, 1]``.  The noisy variant adds ``N(0, Sigma)`` with
    ``Sigma = Q Lambda Q^T`` (random rotation, log-uniform spectrum) scaled so
    that ``|Sigma|_2`` equals the square root of the mean per-coordinate
    variance of the clean outputs.

    The clean outputs do not depend on ``noisy``; only the noise is added.
    """
    if int(N) != N or N < 2:
        raise InvalidParameterError(f"N must be an integer >= 2, got {N}")
    if int(D_gen) != D_gen or D_gen < 1:
        raise InvalidParameterError(f"D_gen must be a positive integer, got {D_gen}")
    N, D_gen = int(N), int(D_gen)
    X = rng.substream(seed, "dec", "inputs").uniform(-1.0, 1.0, size=(N, d))
    a = rng.substream(seed, "dec", "A").standard_normal(p)
    A = np.outer(a, a) / (a @ a)
    sigma = jaakkola_sigma(X, seed)
    spec = KernelSpec.decomposable(A, d, sigma)
    fmap = build_feature_map(spec, D_gen, rng.child_seed(seed, "dec", "frequencies"))
    Theta = rng.substream(seed, "dec", "theta").uniform(-1.0, 1.0, size=(2 * D_gen, fmap.pprime))
    Y = FastOperator(fmap).apply(X, Theta)
    meta = {"name": "dec", "seed": seed, "D_gen": D_gen, "sigma": sigma, "A": A, "noise": None}
    if noisy:
        g = rng.substream(seed, "dec", "noise")
        Q = ortho_group.rvs(p, random_state=g)
        lam = np.exp(g.uniform(np.log(1e-2), 0.0, size=p))
        Sigma = (Q * lam) @ Q.T
        Sigma *= np.sqrt(np.mean(np.var(Y, axis=0))) / np.linalg.norm(Sigma, 2)
        Y = Y + g.multivariate_normal(np.zeros(p), Sigma, size=N, method="eigh")
        meta["noise"] = {"kind": "gaussian", "Sigma": Sigma}
    return Dataset(X, Y, meta)


# -- splitting and files ------------------------------------------------------

def train_test_split(ds, train_fraction=0.7, seed=0):
    """Seeded shuffle followed by a ``train_fraction`` / rest split."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidParameterError("train_fraction must lie in (0, 1)")
    perm = rng.substream(seed, "split").permutation(ds.n)
    cut = int(round(train_fraction * ds.n))
    cut = min(max(cut, 1), ds.n - 1)
    return ds.subset(perm[:cut]), ds.subset(perm[cut:])


def write_csv(ds, path):
    header = [f"x{i + 1}" for i in range(ds.d)] + [f"y{j + 1}" for j in range(ds.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.hstack([ds.X, ds.Y]):
            w.writerow([repr(float(v)) for v in row])


def read_csv(path, require_outputs=True):
    """Read an ``x1..xd,y1..yp`` file; the ``y`` columns are optional unless required."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InvalidParameterError(f"{path} is empty") from None
        try:
            values = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        except ValueError as exc:
            raise InvalidParameterError(f"{path}: {exc}") from None
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    ycols = [i for i, h in enumerate(header) if h.startswith("y")]
    if not xcols or len(xcols) + len(ycols) != len(header):
        raise InvalidParameterError(f"{path}: header must be x1..xd[,y1..yp], got {header}")
    if require_outputs and not ycols:
        raise InvalidParameterError(f"{path} has no output columns")
    values = values.reshape(-1, len(header))
    Y = values[:, ycols] if ycols else np.zeros((values.shape[0], 0))
    return Dataset(values[:, xcols], Y, {"name": str(path)})
