import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import hand_bound, orlicz_oracle, random_psd
from orffkit import bounds
from orffkit.errors import DegenerateInputError, InvalidParameterError
from orffkit.kernels import KernelSpec, signature


def unit_norm_psd(p, seed):
    A = random_psd(np.random.default_rng(seed), p, 2)
    return A / np.linalg.norm(A, 2)


class TestMoments:
    def test_curl_values(self):
        m = bounds.moments(KernelSpec.curl_free(3, 1.0))
        np.testing.assert_array_equal(m.EA, np.eye(3))
        np.testing.assert_array_equal(m.VA, 4 * np.eye(3))

    def test_decomposable_has_no_variance(self):
        spec = KernelSpec.decomposable(unit_norm_psd(3, 0), 2, 1.0)
        m = bounds.moments(spec)
        np.testing.assert_array_equal(m.EA, spec.A)
        np.testing.assert_array_equal(m.VA, 0.0)

    def test_div_printed_variance(self):
        m = bounds.moments(KernelSpec.div_free(2, 1.0), variant="printed")
        np.testing.assert_array_equal(m.EA, np.eye(2))
        np.testing.assert_array_equal(m.VA, 10 * np.eye(2))

    def test_div_exact_variance(self):
        m = bounds.moments(KernelSpec.div_free(4, 0.5))
        np.testing.assert_allclose(m.VA, 9 * np.eye(4) / 0.5**4)

    def test_unknown_variant(self):
        with pytest.raises(InvalidParameterError):
            bounds.moments(KernelSpec.div_free(2, 1.0), variant="nope")

    @pytest.mark.parametrize("family,d,sigma", [("curl", 2, 1.0), ("curl", 3, 0.7),
                                                ("div", 2, 1.0), ("div", 3, 1.3), ("div", 4, 1.0)])
    def test_monte_carlo_oracle(self, family, d, sigma):
        spec = KernelSpec.make(family, d, sigma)
        mc = bounds.moments_mc(spec, 1_000_000, 17)
        exact = bounds.moments(spec)
        assert np.linalg.norm(mc.EA - exact.EA) <= 0.02 * np.linalg.norm(exact.EA)
        assert np.linalg.norm(mc.VA - exact.VA) <= 0.02 * np.linalg.norm(exact.VA)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_printed_div_variance_is_rejected_by_monte_carlo(self, d):
        spec = KernelSpec.div_free(d, 1.0)
        mc = bounds.moments_mc(spec, 400_000, 3)
        printed = bounds.moments(spec, variant="printed").VA
        assert np.linalg.norm(mc.VA - printed) > 0.5 * np.linalg.norm(printed)


class TestBD:
    def test_printed_decomposable_origin(self):
        spec = KernelSpec.decomposable(unit_norm_psd(3, 1), 2, 1.0)
        assert bounds.bD_bound(spec, np.zeros(2), "printed") == pytest.approx(2.0, abs=1e-14)

    def test_printed_curl_origin(self):
        spec = KernelSpec.curl_free(2, 1.0)
        assert bounds.bD_bound(spec, np.zeros(2), "printed") == pytest.approx(3.5, abs=1e-14)

    def test_generic_origin_values(self):
        dec = KernelSpec.decomposable(unit_norm_psd(3, 1), 2, 1.0)
        assert bounds.bD_bound(dec, np.zeros(2)) == pytest.approx(0.0, abs=1e-15)
        assert bounds.bD_bound(KernelSpec.curl_free(2, 1.0), np.zeros(2)) == pytest.approx(3.0, abs=1e-14)

    @pytest.mark.parametrize("family", ["dec", "curl", "div"])
    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_closed_equals_generic(self, family, d):
        if family == "dec":
            spec = KernelSpec.decomposable(random_psd(np.random.default_rng(d), 3, 2), d, 0.8)
        else:
            spec = KernelSpec.make(family, d, 0.8)
        for delta in np.random.default_rng(d + 10).uniform(-2, 2, (50, d)):
            g = bounds.bD_bound(spec, delta)
            c = bounds.bD_bound(spec, delta, "closed")
            assert abs(g - c) <= 1e-10 * max(1.0, abs(g))

    def test_generic_matches_true_variance_for_decomposable(self):
        # With a constant A the generic bound is the variance itself.
        spec = KernelSpec.decomposable(unit_norm_psd(3, 2), 3, 1.0)
        delta = np.array([0.7, -0.4, 0.3])
        emp = bounds.empirical_variance(spec, delta, 400_000, 5)
        assert emp == pytest.approx(bounds.bD_bound(spec, delta), rel=0.02)

    def test_rejects_bad_delta(self):
        with pytest.raises(InvalidParameterError):
            bounds.bD_bound(KernelSpec.curl_free(3, 1.0), np.zeros(2))
        with pytest.raises(InvalidParameterError):
            bounds.bD_bound(KernelSpec.curl_free(3, 1.0), np.zeros(3), "other")


class TestEmpiricalVariance:
    def test_decomposable_origin_is_zero(self):
        spec = KernelSpec.decomposable(unit_norm_psd(2, 3), 3, 1.0)
        assert bounds.empirical_variance(spec, np.zeros(3), 1000, 0) == 0.0

    def test_stable_under_doubling(self):
        spec = KernelSpec.curl_free(4, 1.0)
        delta = np.array([0.3, -0.2, 0.5, 0.1])
        samples = bounds.variance_samples(spec, delta, 20_000, 8)
        se = np.linalg.norm(samples.std(axis=0, ddof=1), 2) / np.sqrt(len(samples))
        a = bounds.empirical_variance(spec, delta, 10_000, 8)
        b = bounds.empirical_variance(spec, delta, 20_000, 8)
        assert abs(a - b) < 3 * se

    def test_needs_two_samples(self):
        with pytest.raises(InvalidParameterError):
            bounds.empirical_variance(KernelSpec.curl_free(2, 1.0), np.zeros(2), 1, 0)


class TestOrlicz:
    def test_curl_closed_form(self):
        assert bounds.orlicz_psi1(KernelSpec.curl_free(2, 1.0)) == pytest.approx(4.0, rel=1e-15)

    @pytest.mark.parametrize("family,d,sigma", [("curl", 2, 1.0), ("curl", 3, 0.5), ("div", 4, 1.5),
                                                ("div", 1, 1.0)])
    def test_root_finding_oracle(self, family, d, sigma):
        spec = KernelSpec.make(family, d, sigma)
        oracle = orlicz_oracle(d / 2.0, 2.0 / sigma**2)
        assert bounds.orlicz_psi1(spec) == pytest.approx(oracle, rel=1e-8)

    def test_decomposable(self):
        A = np.log(2.0) * unit_norm_psd(3, 4)
        assert bounds.orlicz_psi1(KernelSpec.decomposable(A, 2, 1.0)) == pytest.approx(1.0, rel=1e-14)


class TestSigmaP2:
    def test_decomposable(self):
        spec = KernelSpec.decomposable(unit_norm_psd(3, 5), 4, 2.0)
        assert bounds.sigma_p2(spec) == pytest.approx(1.0, rel=1e-15)

    def test_curl(self):
        assert bounds.sigma_p2(KernelSpec.curl_free(2, 1.0)) == 48.0

    def test_bandwidth_scaling(self):
        a = bounds.sigma_p2(KernelSpec.curl_free(3, 0.7))
        b = bounds.sigma_p2(KernelSpec.curl_free(3, 1.4))
        assert a / b == pytest.approx(2.0**6, rel=1e-14)

    @pytest.mark.parametrize("spec", [KernelSpec.curl_free(2, 1.0), KernelSpec.div_free(3, 0.8),
                                      KernelSpec.decomposable(np.diag([2.0, 1.0]), 3, 1.2)])
    def test_monte_carlo_oracle(self, spec):
        assert bounds.sigma_p2_mc(spec, 1_000_000, 21) == pytest.approx(bounds.sigma_p2(spec), rel=0.03)


class TestM:
    def test_decomposable(self):
        spec = KernelSpec.decomposable(unit_norm_psd(3, 6), 2, 1.0)
        assert bounds.m_constant(spec) == pytest.approx(4 * (1 / math.log(2) + 1), rel=1e-14)
        assert bounds.m_constant(spec) == pytest.approx(9.771, abs=1e-3)

    def test_curl(self):
        assert bounds.m_constant(KernelSpec.curl_free(2, 1.0)) == pytest.approx(20.0, rel=1e-14)

    def test_monotone_in_A(self):
        A = unit_norm_psd(3, 7)
        vals = [bounds.m_constant(KernelSpec.decomposable(c * A, 2, 1.0)) for c in (0.5, 1, 2, 4)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("family", ["dec", "curl", "div"])
    def test_signature_peaks_at_origin(self, family):
        spec = KernelSpec.make(family, 3, 0.9)
        grid = np.random.default_rng(8).uniform(-2, 2, (1000, 3))
        norms = np.linalg.norm(signature(spec, grid), 2, axis=(1, 2))
        assert norms.max() <= bounds.sup_signature_norm(spec) + 1e-15


class TestTheoremBound:
    def test_dimension_constant(self):
        # d = 2: p * (1/1 + 1) * 2^(14/4)
        assert bounds.dimension_constant(2, 2) == pytest.approx(2 * 2 * 2**3.5, rel=1e-15)

    def test_curl_reference_instance(self):
        spec = KernelSpec.curl_free(2, 1.0)
        bD = bounds.bD_bound(spec, np.zeros(2))
        inputs = bounds.BoundInputs(2, 2, 1024, 2.0, 0.5, bounds.sigma_p2(spec), bD, bounds.m_constant(spec))
        rep = bounds.theorem_bound(inputs)
        # D large enough that the clamp is inactive.
        big = bounds.theorem_bound(bounds.BoundInputs(2, 2, 200_000, 2.0, 0.5, 48.0, 3.0, 20.0))
        for r, D in ((rep, 1024), (big, 200_000)):
            val, u, Cd = hand_bound(2, 2, 2.0, 0.5, D, 48.0, 3.0, 20.0)
            assert r.regime == "subexponential"
            assert r.u_bar == pytest.approx(u, rel=1e-12)
            assert r.C_d == pytest.approx(Cd, rel=1e-12)
            assert r.probability == pytest.approx(val, rel=1e-12, abs=1e-300)
        assert rep.probability == 1.0
        assert 0.0 < big.probability < 1.0

    def test_subgaussian_instance(self):
        inputs = bounds.BoundInputs(3, 3, 50_000, 1.5, 0.4, 40.0, 15.0, 20.0)
        rep = bounds.theorem_bound(inputs)
        val, u, _ = hand_bound(3, 3, 1.5, 0.4, 50_000, 40.0, 15.0, 20.0)
        assert rep.regime == "subgaussian"
        assert rep.probability == pytest.approx(val, rel=1e-12)
        assert 0.0 < rep.probability < 1.0

    def test_appendix_variant(self):
        inputs = bounds.BoundInputs(2, 2, 300_000, 2.0, 0.5, 48.0, 3.0, 20.0)
        rep = bounds.theorem_bound(inputs, appendix_ubar=True)
        val, u, _ = hand_bound(2, 2, 2.0, 0.5, 300_000, 48.0, 3.0, 20.0, appendix=True)
        assert rep.u_bar == pytest.approx(u, rel=1e-12)
        assert rep.probability == pytest.approx(val, rel=1e-12)

    def test_zero_bD_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            bounds.theorem_bound(bounds.BoundInputs(2, 2, 10, 1.0, 0.5, 1.0, 0.0, 1.0))

    def test_inputs_validated(self):
        with pytest.raises(InvalidParameterError):
            bounds.BoundInputs(2, 2, 10, 1.0, -0.5, 1.0, 1.0, 1.0)

    def test_large_epsilon_vanishes(self):
        rep = bounds.theorem_bound(bounds.BoundInputs(2, 2, 1024, 2.0, 1e6, 48.0, 3.0, 20.0))
        assert rep.probability < 1e-100

    @settings(max_examples=60, deadline=None)
    @given(d=st.integers(1, 6), D=st.integers(1, 10**6), eps=st.floats(1e-3, 10.0),
           bD=st.floats(1e-3, 50.0), m=st.floats(0.1, 100.0), l=st.floats(0.1, 10.0))
    def test_probability_range_and_monotone_in_D(self, d, D, eps, bD, m, l):
        a = bounds.theorem_bound(bounds.BoundInputs(d, d, D, l, eps, 10.0, bD, m))
        b = bounds.theorem_bound(bounds.BoundInputs(d, d, 2 * D, l, eps, 10.0, bD, m))
        assert 0.0 <= b.probability <= a.probability <= 1.0

    def test_bound_inputs_builder(self):
        spec = KernelSpec.curl_free(2, 1.0)
        inputs = bounds.bound_inputs(spec, 1024, 2.0, 0.5, n_delta=20, seed=3)
        assert inputs.sigma_p2 == 48.0 and inputs.m == pytest.approx(20.0)
        # the sampled sup is at least the value at the origin for this kernel family
        assert inputs.bD >= bounds.bD_bound(spec, np.zeros(2)) - 1e-12
        assert inputs == bounds.bound_inputs(spec, 1024, 2.0, 0.5, n_delta=20, seed=3)

    def test_report_serialises(self):
        rep = bounds.theorem_bound(bounds.BoundInputs(2, 2, 1024, 2.0, 0.5, 48.0, 3.0, 20.0))
        d = rep.to_dict()
        assert d["inputs"]["D"] == 1024 and d["regime"] in ("subgaussian", "subexponential")


def rff_scalar_bound(d, sigma2, l, eps, D):
    return min(1.0, 2**8 * (math.sqrt(sigma2) * l / eps) ** 2 * math.exp(-eps**2 * D / (4 * (d + 2))))


class TestDecomposableCorollary:
    def test_hand_instance(self):
        # |A| = 2, d = 3, E|w|^2 = 3 / 0.5^2 = 12, l = 1, eps = 0.5, D = 10^4
        val = bounds.decomposable_corollary(2.0, 3, 12.0, 1.0, 0.5, 10_000)
        expected = 2**8 * (3 * math.sqrt(12.0) * 2.0 * 1.0 / 0.5) ** 2 * math.exp(-0.25 * 10_000 / (4 * 4.0 * 5))
        assert val == pytest.approx(expected, rel=1e-12)

    def test_unit_norm_reduces_to_scalar_theorem(self):
        # With |A| = 1 the prefactor carries d^2 sigma^2, the scalar theorem's sigma^2 being d^2 sigma^2 / d^2.
        for D in (5_000, 50_000):
            a = bounds.decomposable_corollary(1.0, 2, 4.0, 1.5, 0.3, D)
            assert a == pytest.approx(rff_scalar_bound(2, 4.0 * 4, 1.5, 0.3, D), rel=1e-12)

    def test_doubling_eps_quarters_prefactor(self):
        a = bounds.decomposable_corollary(1.0, 2, 4.0, 1.0, 0.1, 400_000)
        b = bounds.decomposable_corollary(1.0, 2, 4.0, 1.0, 0.2, 100_000)
        assert b / a == pytest.approx(0.25, rel=1e-10)

    def test_clamped_and_monotone(self):
        vals = [bounds.decomposable_corollary(1.0, 2, 4.0, 1.0, 0.2, D) for D in (10, 10**3, 10**5, 10**6)]
        assert vals[0] == 1.0
        assert all(0.0 <= b <= a <= 1.0 for a, b in zip(vals, vals[1:]))

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidParameterError):
            bounds.decomposable_corollary(0.0, 2, 4.0, 1.0, 0.2, 10)
