"""Experiment drivers.  Each returns a :class:`SweepResult` that writes one CSV.

Every grid point draws from its own substream of the base seed, and results
are gathered in grid order, so outputs do not depend on the thread count.
Wall-clock columns are the only non-deterministic content; pass
``record_time=False`` to zero them when byte-identical files are needed.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .. import _parallel, rng
from ..bounds import bD_bound, empirical_variance
from ..errors import InvalidParameterError
from ..features import FastOperator, build_feature_map
from ..kernels import KernelSpec, signature
from ..learn import MAX_UNKNOWNS, SolverConfig, SteinSolver, fit_cg, fit_exact_ovk, fit_ridge_path
from .data import jaakkola_sigma, synth_dec, synth_fields, train_test_split

HEADER = ("sweep", "metric", "value", "seconds", "seed")


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Rows of ``(sweep, metric, value, seconds, seed)``.

    Within each metric the sweep variable is strictly increasing.
    """

    rows: list = field(default_factory=list)

    def __post_init__(self):
        last = {}
        for sweep, metric, *_ in self.rows:
            if metric in last and not sweep > last[metric]:
                raise InvalidParameterError(f"sweep values for {metric!r} must increase strictly")
            last[metric] = sweep

    @property
    def metrics(self):
        return list(dict.fromkeys(r[1] for r in self.rows))

    def series(self, metric):
        sel = [r for r in self.rows if r[1] == metric]
        return np.array([r[0] for r in sel], dtype=float), np.array([r[2] for r in sel], dtype=float)

    def seconds(self, metric):
        return np.array([r[3] for r in self.rows if r[1] == metric], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for sweep, metric, value, seconds, seed in self.rows:
                w.writerow([_fmt(sweep), metric, _fmt(value), _fmt(seconds), int(seed)])


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _timer(record_time):
    if not record_time:
        return lambda: 0.0
    start = time.perf_counter()
    return lambda: time.perf_counter() - start


def _check_grid(values, name, integer=False):
    values = list(values)
    if not values:
        raise InvalidParameterError(f"{name} grid is empty")
    if any(not v > 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidParameterError(f"{name} grid must be positive and strictly increasing")
    if integer and any(int(v) != v for v in values):
        raise InvalidParameterError(f"{name} grid must contain integers")
    return [int(v) for v in values] if integer else [float(v) for v in values]


def _check_count(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidParameterError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def power_grid(lo, hi):
    """Powers of two from ``lo`` to ``hi`` inclusive (both rounded to powers of two)."""
    lo, hi = _check_count(lo, "dmin"), _check_count(hi, "dmax")
    if hi < lo:
        raise InvalidParameterError("dmax must not be smaller than dmin")
    return [2**k for k in range(int(np.ceil(np.log2(lo))), int(np.floor(np.log2(hi))) + 1)]


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- approximation error -----------------------------------------------------

def sup_errors(fmap, deltas, exact, D_grid):
    """``max_pairs |Ktilde - K0|_2`` for each prefix length in ``D_grid``."""
    out = []
    for D in D_grid:
        err = fmap.prefix(D).approx_signature(deltas) - exact
        out.append(float(np.linalg.norm(err, 2, axis=(1, 2)).max()))
    return out


def run_approx_error(spec, D_grid, pairs=100, seeds=10, seed=0, record_time=True):
    """Median over seeds of the sup-norm kernel error on random pairs in ``[-1, 1]^d``.

    Each seed draws ``max(D_grid)`` frequencies once and evaluates nested
    prefixes, as in a single growing Monte-Carlo run.
    """
    D_grid = _check_grid(D_grid, "D", integer=True)
    pairs, seeds = _check_count(pairs, "pairs"), _check_count(seeds, "seeds")
    g = rng.substream(seed, "approx-error", "pairs")
    x = g.uniform(-1, 1, size=(pairs, spec.d))
    z = g.uniform(-1, 1, size=(pairs, spec.d))
    deltas = x - z
    exact = signature(spec, deltas)
    elapsed = _timer(record_time)

    def one(s):
        fmap = build_feature_map(spec, D_grid[-1], rng.child_seed(seed, "approx-error", s))
        return sup_errors(fmap, deltas, exact, D_grid)

    errs = np.array(_parallel.ordered_map(one, range(seeds)))
    secs = elapsed()
    med = np.median(errs, axis=0)
    return SweepResult([(D, "sup_error", float(v), secs, seed) for D, v in zip(D_grid, med)])


# -- variance bound ----------------------------------------------------------

def run_variance(spec, n_deltas=20, n_mc=10_000, seed=0, radius=1.0, record_time=True):
    """Empirical variance and its upper bound at random displacements.

    Displacements are drawn uniformly from ``[-radius, radius]^d`` and the
    rows are indexed by ``|delta|`` (increasing).
    """
    n_deltas, n_mc = _check_count(n_deltas, "deltas"), _check_count(n_mc, "mc", 2)
    deltas = rng.substream(seed, "variance", "deltas").uniform(-radius, radius, size=(n_deltas, spec.d))
    deltas = deltas[np.argsort(np.linalg.norm(deltas, axis=1))]
    elapsed = _timer(record_time)

    def one(k):
        delta = deltas[k]
        emp = empirical_variance(spec, delta, n_mc, rng.child_seed(seed, "variance", k))
        return emp, bD_bound(spec, delta)

    vals = _parallel.ordered_map(one, range(n_deltas))
    secs = elapsed()
    rows = []
    for delta, (emp, bnd) in zip(deltas, vals):
        r = float(np.linalg.norm(delta))
        rows += [(r, "empirical", emp, secs, seed), (r, "bound", bnd, secs, seed)]
    return SweepResult(rows)


# -- learning curves ----------------------------------------------------------

def rmse(Y, Yhat):
    """``sqrt(mean_i |y_i - yhat_i|^2)``."""
    return float(np.sqrt(np.mean(np.sum((Y - Yhat) ** 2, axis=1))))


def cv_lambda(fmap, X, Y, lams, seed=0):
    """Regularisation value minimising 2-fold validation error (Stein solver)."""
    perm = rng.substream(seed, "cv").permutation(X.shape[0])
    folds = np.array_split(perm, 2)
    err = np.zeros(len(lams))
    op = FastOperator(fmap)
    for k in range(2):
        tr, va = folds[1 - k], folds[k]
        solver = SteinSolver(fmap, X[tr], Y[tr])
        for i, lam in enumerate(lams):
            err[i] += np.sum((op.apply(X[va], solver.solve(lam)) - Y[va]) ** 2)
    return float(lams[int(np.argmin(err))])


def n_grid(nmin, nmax, per_decade=1):
    """Log-spaced sample sizes from ``nmin`` to ``nmax`` inclusive."""
    nmin, nmax = _check_count(nmin, "nmin", 2), _check_count(nmax, "nmax", 2)
    if nmax < nmin:
        raise InvalidParameterError("nmax must not be smaller than nmin")
    k = max(1, int(round(per_decade * np.log10(nmax / nmin))))
    return sorted({int(round(v)) for v in np.geomspace(nmin, nmax, k + 1)})


DEFAULT_LAMBDAS = tuple(10.0 ** np.arange(-8, -1))


def run_learning_curve(N_grid, D=100, seeds=10, D_gen=10_000, lams=DEFAULT_LAMBDAS, seed=0,
                       with_ovk=True, record_time=True):
    """Test RMSE of decomposable ORFF (and exact OVK) on the rank-one benchmark.

    For each ``N`` and seed the clean and noisy data sets share inputs and
    clean outputs.  Data are split 70/30, the model bandwidth is the median
    heuristic on the training inputs, and lambda is picked by 2-fold
    cross-validation.  Values are averages over seeds; the ``seconds`` column
    holds the mean fit time.  Exact OVK rows appear only where its size guard
    allows.
    """
    N_grid = _check_grid(N_grid, "N", integer=True)
    seeds = _check_count(seeds, "seeds")
    lams = _check_grid(lams, "lambda")
    rows = []
    for N in N_grid:
        acc = {}
        for s in range(seeds):
            run_seed = rng.child_seed(seed, "learning-curve", N, s)
            for noisy in (False, True):
                tag = "noisy" if noisy else "clean"
                ds = synth_dec(N, D_gen, noisy, run_seed)
                train, test = train_test_split(ds, 0.7, run_seed)
                sigma = jaakkola_sigma(train.X, run_seed)
                A = ds.meta["A"]
                spec = KernelSpec.decomposable(A, A.shape[0], sigma)
                elapsed = _timer(record_time)
                fmap = build_feature_map(spec, D, rng.child_seed(run_seed, "model"))
                lam = cv_lambda(fmap, train.X, train.Y, lams, run_seed)
                Theta = SteinSolver(fmap, train.X, train.Y).solve(lam)
                secs = elapsed()
                pred = FastOperator(fmap).apply(test.X, Theta)
                acc.setdefault(f"orff_rmse_{tag}", []).append((rmse(test.Y, pred), secs))
                if with_ovk and train.n * spec.p <= MAX_UNKNOWNS:
                    elapsed = _timer(record_time)
                    model = fit_exact_ovk(spec, train.X, train.Y, lam)
                    secs = elapsed()
                    acc.setdefault(f"ovk_rmse_{tag}", []).append((rmse(test.Y, model.predict(test.X)), secs))
        for metric, vals in acc.items():
            v = np.array(vals)
            rows.append((N, metric, float(v[:, 0].mean()), float(v[:, 1].mean()), seed))
    return SweepResult(_by_metric(rows))


def _by_metric(rows):
    order = list(dict.fromkeys(r[1] for r in rows))
    return sorted(rows, key=lambda r: (order.index(r[1]), r[0]))


# -- curl-free versus independent features ------------------------------------

def run_field_comparison(D_grid, n=1000, seeds=5, noise_sd=0.0, sigmas=(0.2, 0.3, 0.5, 0.8),
                         lams=(1e-8, 1e-6, 1e-4, 1e-2), seed=0, record_time=True):
    """Test MSE of curl-free ORFF versus identity-decomposable ORFF on the curl field.

    Bandwidth and lambda are selected per model on a validation split of the
    training data.  Values are medians over seeds.
    """
    D_grid = _check_grid(D_grid, "D", integer=True)
    seeds = _check_count(seeds, "seeds")
    lams = _check_grid(lams, "lambda")
    sigmas = _check_grid(sigmas, "sigma")
    rows = []
    results = {}
    for D in D_grid:
        for s in range(seeds):
            run_seed = rng.child_seed(seed, "field", s)
            curl_ds, _ = synth_fields(n, noise_sd, run_seed)
            train, test = train_test_split(curl_ds, 0.7, run_seed)
            fit_part, val_part = train_test_split(train, 0.7, rng.child_seed(run_seed, "val"))
            for family in ("curl", "dec"):
                elapsed = _timer(record_time)
                best = None
                for sigma in sigmas:
                    spec = KernelSpec.make(family, 2, sigma)
                    fmap = build_feature_map(spec, D, rng.child_seed(run_seed, "freq", D))
                    for lam, model in zip(lams, fit_ridge_path(fmap, fit_part.X, fit_part.Y, lams)):
                        err = np.mean(np.sum((model.predict(val_part.X) - val_part.Y) ** 2, axis=1))
                        if best is None or err < best[0]:
                            best = (err, fmap, lam)
                _, fmap, lam = best
                model = fit_ridge_path(fmap, train.X, train.Y, [lam])[0]
                secs = elapsed()
                mse = float(np.mean(np.sum((model.predict(test.X) - test.Y) ** 2, axis=1)))
                results.setdefault((D, family), []).append((mse, secs))
    for family in ("curl", "dec"):
        for D in D_grid:
            v = np.array(results[(D, family)])
            rows.append((D, f"{family}_mse", float(np.median(v[:, 0])), float(np.median(v[:, 1])), seed))
    return SweepResult(rows)


# -- scaling ------------------------------------------------------------------

def _best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_timing(N_grid, D=256, lam=1e-4, sigma=0.3, seed=0, with_ovk=True, repeats=3):
    """Fit wall time of curl-free ORFF (CG) and exact OVK on the curl field.

    Each time is the best of ``repeats`` runs.  The ``value`` column is the
    wall time itself, so this sweep is never byte-reproducible.
    """
    repeats = _check_count(repeats, "repeats")
    N_grid = _check_grid(N_grid, "N", integer=True)
    spec = KernelSpec.curl_free(2, sigma)
    rows = {"orff_seconds": [], "ovk_seconds": []}
    config = SolverConfig("cg", tol=1e-6)
    for N in N_grid:
        ds, _ = synth_fields(N, 0.0, rng.child_seed(seed, "timing", N))
        fmap = build_feature_map(spec, D, rng.child_seed(seed, "timing-freq"))
        t = _best_time(lambda: fit_cg(fmap, ds.X, ds.Y, lam, config), repeats)
        rows["orff_seconds"].append((N, "orff_seconds", t, t, seed))
        if with_ovk and N * spec.p <= MAX_UNKNOWNS:
            t = _best_time(lambda: fit_exact_ovk(spec, ds.X, ds.Y, lam), repeats)
            rows["ovk_seconds"].append((N, "ovk_seconds", t, t, seed))
    return SweepResult(rows["orff_seconds"] + rows["ovk_seconds"])
