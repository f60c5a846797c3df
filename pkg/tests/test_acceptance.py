"""One test per acceptance criterion, each printing a PASS/FAIL line.

The lines are also collected into a terminal-summary section.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import hand_bound, orlicz_oracle, random_psd, rel
from orffkit import bounds, learn
from orffkit.features import FastOperator, build_feature_map
from orffkit.kernels import KernelSpec, exact_gram, signature
from orffkit.workbench import (
    loglog_slope, power_grid, run_approx_error, run_field_comparison, run_learning_curve,
    run_timing, run_variance,
)

pytestmark = pytest.mark.slow


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def unit_A(p, seed):
    A = random_psd(np.random.default_rng(seed), p)
    return A / np.linalg.norm(A, 2)


def spec_for(family, d, sigma=1.0, seed=0):
    return KernelSpec.make(family, d, sigma, A=unit_A(d, seed) if family == "dec" else None)


def test_1_monte_carlo_convergence():
    start = time.perf_counter()
    grid = power_grid(16, 4096)
    parts, ok = [], True
    for family in ("dec", "curl", "div"):
        D, err = run_approx_error(spec_for(family, 4), grid, pairs=100, seeds=10, seed=1).series("sup_error")
        slope, ratio = loglog_slope(D, err), err[0] / err[-1]
        ok &= -0.65 <= slope <= -0.35 and ratio >= 10
        parts.append(f"{family} slope={slope:.3f} ratio={ratio:.1f}")
    secs = time.perf_counter() - start
    record(1, ok and secs < 60, "; ".join(parts) + f"; {secs:.1f}s (limit 60s)")


def test_2_variance_bound_domination():
    start = time.perf_counter()
    parts, ok = [], True
    for family in ("dec", "curl"):
        res = run_variance(spec_for(family, 4), n_deltas=20, n_mc=10_000, seed=2)
        worst = float(np.max(res.series("empirical")[1] / res.series("bound")[1]))
        ok &= worst <= 1.05
        parts.append(f"{family} max empirical/bound={worst:.3f}")
    secs = time.perf_counter() - start
    record(2, ok and secs < 30, "; ".join(parts) + f"; {secs:.1f}s (limit 30s)")


def test_3_fast_operator_correctness():
    g = np.random.default_rng(3)
    dev_apply = dev_adj = dev_normal = dev_id = 0.0
    for family in ("dec", "curl", "div"):
        for case in range(50):
            d = int(g.integers(1, 6))
            spec = KernelSpec.make(family, d, float(g.uniform(0.3, 2.0)),
                                   A=random_psd(g, int(g.integers(1, 6)), int(g.integers(1, 3)))
                                   if family == "dec" else None)
            fmap = build_feature_map(spec, int(g.integers(1, 40)), case)
            op = FastOperator(fmap)
            N = int(g.integers(1, 8))
            X = g.uniform(-2, 2, (N, d))
            theta = g.standard_normal(fmap.feature_dim)
            Y = g.standard_normal((N, fmap.p))
            Phi = fmap.design_matrix(X)
            Ptheta = op.apply(X, theta)
            dev_apply = max(dev_apply, np.abs(Ptheta.ravel() - Phi @ theta).max())
            dev_adj = max(dev_adj, np.abs(op.adjoint(X, Y) - Phi.T @ Y.ravel()).max())
            dev_normal = max(dev_normal, np.abs(op.normal(X, theta) - Phi.T @ (Phi @ theta)).max())
            lhs, rhs = np.sum(Ptheta * Y), op.adjoint(X, Y) @ theta
            dev_id = max(dev_id, abs(lhs - rhs) / max(1.0, abs(lhs)))
    worst = max(dev_apply, dev_adj, dev_normal, dev_id)
    record(3, worst <= 1e-10, f"150 cases; max |apply|={dev_apply:.1e} |adjoint|={dev_adj:.1e} "
                              f"|normal|={dev_normal:.1e} |<Pt,y>-<t,P*y>|={dev_id:.1e} (tol 1e-10)")


def test_4_solver_cross_validation():
    worst_agree = worst_res = 0.0
    for k in range(10):
        g = np.random.default_rng(400 + k)
        spec = KernelSpec.decomposable(random_psd(g, 4, int(g.integers(1, 5))), 3, float(g.uniform(0.5, 2)))
        fmap = build_feature_map(spec, 16, k)
        X, Y = g.standard_normal((40, 3)), g.standard_normal((40, 4))
        lam = 1e-3
        st = learn.fit_stein(fmap, X, Y, lam).Theta
        cg = learn.fit_cg(fmap, X, Y, lam, learn.SolverConfig(tol=1e-12)).Theta
        dn = learn.fit_dense(fmap, X, Y, lam).Theta
        worst_agree = max(worst_agree, rel(cg, st), rel(dn, st), rel(cg, dn))
        solver = learn.SteinSolver(fmap, X, Y)
        worst_res = max(worst_res, np.linalg.norm(solver.residual(st, lam)) / np.linalg.norm(solver.C))
    record(4, worst_agree <= 1e-6 and worst_res <= 1e-8,
           f"10 instances; max relative disagreement={worst_agree:.1e} (tol 1e-6); "
           f"max Stein residual/|C|={worst_res:.1e} (tol 1e-8)")


def test_5_gradient_check():
    g = np.random.default_rng(5)
    worst, h = 0.0, 1e-6
    for k in range(20):
        family = ("dec", "curl", "div")[k % 3]
        d = int(g.integers(1, 4))
        spec = KernelSpec.make(family, d, float(g.uniform(0.5, 2)),
                               A=random_psd(g, 3) if family == "dec" else None)
        fmap = build_feature_map(spec, 5, k)
        X, Y = g.standard_normal((12, d)), g.standard_normal((12, spec.p))
        lam = float(10 ** g.uniform(-4, -1))
        theta = g.standard_normal(fmap.feature_dim)
        grad = learn.ridge_gradient(fmap, X, Y, theta, lam)
        fd = np.empty_like(theta)
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = h
            fd[i] = (learn.ridge_objective(fmap, X, Y, theta + e, lam)
                     - learn.ridge_objective(fmap, X, Y, theta - e, lam)) / (2 * h)
        worst = max(worst, rel(grad, fd))
    record(5, worst <= 1e-5, f"20 points; max relative gradient error={worst:.1e} (tol 1e-5)")


def test_6_closed_form_constants():
    parts, ok = [], True
    worst_mc = 0.0
    for spec in (KernelSpec.curl_free(3, 1.0), KernelSpec.div_free(3, 0.8), KernelSpec.curl_free(2, 1.5)):
        exact = bounds.moments(spec)
        mc = bounds.moments_mc(spec, 1_000_000, 61)
        worst_mc = max(worst_mc, rel(mc.EA, exact.EA), rel(mc.VA, exact.VA))
    for spec in (KernelSpec.curl_free(2, 1.0), KernelSpec.div_free(3, 0.8),
                 KernelSpec.decomposable(np.diag([2.0, 1.0]), 3, 1.2)):
        worst_mc = max(worst_mc, abs(bounds.sigma_p2_mc(spec, 1_000_000, 62) / bounds.sigma_p2(spec) - 1))
    ok &= worst_mc <= 0.03
    parts.append(f"moments and sigma_p^2 vs MC max rel={worst_mc:.2e} (tol 3%)")

    worst_orlicz = 0.0
    for family, d, sigma in (("curl", 2, 1.0), ("curl", 3, 0.5), ("div", 4, 1.5)):
        spec = KernelSpec.make(family, d, sigma)
        worst_orlicz = max(worst_orlicz, abs(bounds.orlicz_psi1(spec) / orlicz_oracle(d / 2, 2 / sigma**2) - 1))
    A = unit_A(3, 6)
    # A constant X has E exp(X/C) = 2 exactly at C = X / ln 2.
    worst_orlicz = max(worst_orlicz,
                       abs(bounds.orlicz_psi1(KernelSpec.decomposable(A, 2, 1.0)) * math.log(2) - 1))
    ok &= worst_orlicz <= 1e-8
    parts.append(f"Orlicz vs root-finding max rel={worst_orlicz:.1e} (tol 1e-8)")

    worst_hand = 0.0
    for args in ((2, 2, 200_000, 2.0, 0.5, 48.0, 3.0, 20.0), (3, 3, 50_000, 1.5, 0.4, 40.0, 15.0, 20.0)):
        d, p, D, l, eps, sp2, bD, m = args
        for appendix in (False, True):
            rep = bounds.theorem_bound(bounds.BoundInputs(*args), appendix_ubar=appendix)
            val, u, Cd = hand_bound(d, p, l, eps, D, sp2, bD, m, appendix)
            worst_hand = max(worst_hand, abs(rep.probability / val - 1), abs(rep.u_bar / u - 1),
                             abs(rep.C_d / Cd - 1))
    cor = bounds.decomposable_corollary(2.0, 3, 12.0, 1.0, 0.5, 10_000)
    cor_hand = 2**8 * (3 * math.sqrt(12.0) * 2.0 / 0.5) ** 2 * math.exp(-0.25 * 10_000 / (4 * 4.0 * 5))
    worst_hand = max(worst_hand, abs(cor / cor_hand - 1))
    ok &= worst_hand <= 1e-12
    parts.append(f"bound formulas vs longhand max rel={worst_hand:.1e} (tol 1e-12)")
    record(6, ok, "; ".join(parts))


def test_7_learning_trends():
    start = time.perf_counter()
    parts, ok = [], True

    lc = run_learning_curve([100, 1000, 10_000], D=100, seeds=10, D_gen=1000, seed=7, with_ovk=False)
    _, clean = lc.series("orff_rmse_clean")
    _, noisy = lc.series("orff_rmse_noisy")
    decreasing = bool(np.all(np.diff(clean) < 0))
    noisy_ge = bool(np.all(noisy >= clean))
    ok &= decreasing and noisy_ge
    parts.append("dec RMSE clean=" + "/".join(f"{v:.3g}" for v in clean)
                 + " noisy=" + "/".join(f"{v:.3g}" for v in noisy))

    fc = run_field_comparison([256, 512], n=1000, seeds=5, seed=7)
    _, curl = fc.series("curl_mse")
    _, dec = fc.series("dec_mse")
    ok &= bool(np.all(curl < dec))
    parts.append("field MSE curl=" + "/".join(f"{v:.2g}" for v in curl)
                 + " identity=" + "/".join(f"{v:.2g}" for v in dec))

    tm = run_timing([250, 500, 1000, 2000, 4000], seed=7)
    s_orff = loglog_slope(*tm.series("orff_seconds"))
    s_ovk = loglog_slope(*tm.series("ovk_seconds"))
    ok &= s_orff < 2 < s_ovk
    parts.append(f"time slopes orff={s_orff:.2f} ovk={s_ovk:.2f}")

    secs = time.perf_counter() - start
    record(7, ok and secs < 300, "; ".join(parts) + f"; {secs:.0f}s (limit 300s)")


def test_8_exactness_identities():
    g = np.random.default_rng(8)
    worst_diag = worst_shift = 0.0
    min_eig = np.inf
    for D in (1, 3, 17, 100):
        A = random_psd(g, 3, 2)
        fmap = build_feature_map(KernelSpec.decomposable(A, 2, 0.7), D, D)
        for x in g.standard_normal((5, 2)):
            worst_diag = max(worst_diag, np.abs(fmap.approx_kernel(x, x) - A).max())
    for family in ("dec", "curl", "div"):
        spec = spec_for(family, 3, 0.9, seed=8)
        X = g.standard_normal((8, 3))
        min_eig = min(min_eig, np.linalg.eigvalsh(exact_gram(spec, X)).min())
        fmap = build_feature_map(spec, 50, 8)
        min_eig = min(min_eig, np.linalg.eigvalsh(fmap.approx_gram(X)).min())
        c = g.standard_normal(3)
        for x, z in g.standard_normal((5, 2, 3)):
            worst_shift = max(worst_shift, np.abs(fmap.approx_kernel(x + c, z + c) - fmap.approx_kernel(x, z)).max(),
                              np.abs(signature(spec, (x + c) - (z + c)) - signature(spec, x - z)).max())
    ok = worst_diag <= 1e-12 and min_eig >= -1e-10 and worst_shift <= 1e-12
    record(8, ok, f"max |Ktilde(x,x)-A|={worst_diag:.1e}; min Gram eigenvalue={min_eig:.1e} (>= -1e-10); "
                  f"max shift deviation={worst_shift:.1e} (tol 1e-12)")
