"""Independent oracles shared by the test modules."""

import math

import numpy as np
from scipy import integrate, optimize, stats


def fd_hessian(f, x, h=1e-4):
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    d = x.size
    H = np.empty((d, d))
    E = np.eye(d) * h
    for i in range(d):
        for j in range(d):
            H[i, j] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                       - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
    return H


def gaussian(sigma):
    return lambda v: np.exp(-np.dot(v, v) / (2 * sigma**2))


def random_psd(rng, p, rank=None):
    rank = p if rank is None else rank
    M = rng.standard_normal((p, rank))
    return M @ M.T


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300)


def orlicz_oracle(shape, scale):
    """Root of E exp(X/C) = 2 for X ~ Gamma(shape, scale), by quadrature and bracketing."""
    def excess(C):
        f = lambda x: math.exp(x / C + stats.gamma.logpdf(x, shape, scale=scale))
        head = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-11, limit=500)[0]
        tail = integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-11, limit=500)[0]
        return head + tail - 2.0
    lo = scale * 1.01  # MGF is finite only for C > scale, and exceeds 2 here for shape >= 1/2
    hi = 100 * scale * shape + 10
    return optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)


def hand_bound(d, p, l, eps, D, sp2, bD, m, appendix=False):
    """The tail bound written out longhand, without the library helpers."""
    if appendix:
        u = m * math.log(2 * (m / bD) ** 2 + 1)
    else:
        u = 2 * m * math.log(2 ** 1.5 * (m / bD) ** 2)
    Cd = p * ((d / 2) ** (-d / (d + 2)) + (d / 2) ** (2 / (d + 2))) * 2 ** ((6 * d + 2) / (d + 2))
    pre = Cd * (math.sqrt(sp2) * l / eps) ** (2 / (1 + 2 / d))
    if u <= 2 * (math.e - 1) * bD / eps:
        val = pre * math.exp(-eps**2 * D / (8 * (d + 2) * (bD + eps * u / 6)))
    else:
        val = pre * math.exp(-eps * D / ((d + 2) * (math.e - 1) * u))
    return min(1.0, val), u, Cd
