"""Regime classification and the tail approximations of both regimes."""

import math

import pytest

from twoscale import (
    LatticeError,
    PowerScaling,
    RegimeError,
    SeriesUnavailable,
    approx_fast,
    approx_single_timescale,
    approx_slow,
    classify,
    direct_exponent,
    lattice_factor,
    log_asymptote,
    negbin_tail,
)
from twoscale.levy import CharExponent, ModelPair, lmgf
from twoscale.models import exact_law, WorkedModel
from twoscale.twist import solve_twist
from conftest import gp_pair, pg_pair


class TestClassify:
    @pytest.mark.parametrize(
        "f,regime,m_plus,m_minus",
        [
            (3.0, "fast", 1, None),
            (2.5, "fast", 1, None),
            (2.0, "fast", 2, None),  # boundary k included: phi psi^2 = 1
            (1.5, "fast", 3, None),
            (1.25, "fast", 5, None),
            (0.5, "slow", None, 1),
            (0.75, "slow", None, 3),
            (0.3, "slow", None, 0),  # strong separation: empty slow sum
            (1.0, "single", None, None),
        ],
    )
    def test_regimes_and_counts(self, f, regime, m_plus, m_minus):
        info = classify(PowerScaling(f))
        assert info.regime == regime
        assert info.m_plus == m_plus
        assert info.m_minus == m_minus

    @pytest.mark.parametrize(
        "f,k_plus,k_minus",
        [
            (1.5, 1, None),   # psi sqrt(n) constant: one location term
            (1.2, 2, None),
            (2.5, 0, None),   # strong separation: no location terms
            (2.0 / 3.0, None, 1),
            (0.8, None, 2),
            (0.5, None, 0),
        ],
    )
    def test_edgeworth_counts(self, f, k_plus, k_minus):
        info = classify(PowerScaling(f))
        assert info.k_plus == k_plus
        assert info.k_minus == k_minus


class TestLatticeFactor:
    def test_small_span_limit(self):
        theta = 0.01
        assert lattice_factor(theta, 1e-4) / (1.0 / theta) == pytest.approx(1.0, abs=1e-6)

    def test_monotone_in_span(self):
        # d / (1 - e^{-theta d}) grows with d for theta > 0
        vals = [lattice_factor(0.7, d) for d in (1e-3, 0.1, 0.5, 1.0)]
        assert vals == sorted(vals)


class TestApproxFast:
    def test_poisson_gamma_display_formula(self):
        # lattice case: value = exp((1 - rho + log rho) u n + sum) / ((1-rho) sqrt(2 pi u n))
        lam, r, mu, u, f, n = 1.0, 1.0, 3.0, 1.0, 2.5, 500.0
        m, s = pg_pair(lam, r, mu), PowerScaling(f)
        est = approx_fast(m, s, n, u, mode="series", lattice=True)
        rho = lam * r / (mu * u)
        expected = math.exp((1.0 - rho + math.log(rho)) * u * n) / (
            (1.0 - rho) * math.sqrt(2.0 * math.pi * u * n)
        )
        assert est.value == pytest.approx(expected, rel=1e-12)
        assert est.series_order == 1  # m_plus = 1 at f = 2.5: empty sum

    def test_gamma_poisson_display_formula(self):
        # non-lattice: (1/(1/rho - 1)) (2 pi lam r n)^{-1/2} exp((1 - 1/rho + log(1/rho)) lam r n + ...)
        r, mu, lam, u, f, n = 1.0, 2.0, 1.0, 1.0, 1.5, 256.0
        m, s = gp_pair(r, mu, lam), PowerScaling(f)
        est = approx_fast(m, s, n, u, mode="series", order=3, lattice=False)
        rho = lam * r / (mu * u)
        phi, psi = s.phi(n), s.psi(n)
        from twoscale import fast_series_coeffs

        _, _, vbar = fast_series_coeffs(WorkedModel.gamma_poisson(r, mu, lam), u, k_max=3)
        exponent = (1.0 - 1.0 / rho + math.log(1.0 / rho)) * lam * r * n
        exponent += vbar[0] * phi * psi**2 + vbar[1] * phi * psi**3
        expected = math.exp(exponent) / ((1.0 / rho - 1.0) * math.sqrt(2.0 * math.pi * lam * r * n))
        assert est.value == pytest.approx(expected, rel=1e-12)

    def test_lattice_prefactor_converges_to_smooth(self):
        # At u close to a*b, theta* is small and d = 1e-4 is already deep in
        # the d -> 0 regime.
        lam, r, mu = 1.0, 1.0, 2.0
        u = 1.01 * lam * r / mu
        m_d = ModelPair(CharExponent.poisson(lam, lattice_span=1e-4), CharExponent.gamma(r, mu))
        s, n = PowerScaling(1.5), 100.0
        latt = approx_fast(m_d, s, n, u, lattice=True)
        smooth = approx_fast(m_d, s, n, u, lattice=False)
        assert abs(latt.prefactor / smooth.prefactor - 1.0) <= 1e-6

    def test_direct_matches_series_at_high_order(self):
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(1.5)
        direct = approx_fast(m, s, 1e4, 1.0, mode="direct", lattice=True)
        series = approx_fast(m, s, 1e4, 1.0, mode="series", order=4, lattice=True)
        assert abs(direct.log_value - series.log_value) <= 1e-3

    def test_series_error_monotone_in_order(self):
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(1.5)
        direct = approx_fast(m, s, 1e4, 1.0, mode="direct", lattice=True).log_value
        errs = [
            abs(approx_fast(m, s, 1e4, 1.0, mode="series", order=M, lattice=True).log_value - direct)
            for M in range(2, 7)
        ]
        assert all(errs[i + 1] <= errs[i] * (1 + 1e-9) for i in range(len(errs) - 1))

    def test_boundary_f2_constant_term(self):
        # At f = 2 the k = 2 term is the constant vbar_2; direct and series
        # then differ by o(1), shrinking with n.
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(2.0)
        diffs = []
        for n in (1e3, 1e6):
            d = approx_fast(m, s, n, 1.0, mode="direct", lattice=True).log_value
            se = approx_fast(m, s, n, 1.0, mode="series", lattice=True)
            assert se.series_order == 2
            diffs.append(abs(d - se.log_value))
        assert diffs[1] < diffs[0]
        assert diffs[1] < 1e-2

    def test_underflow_reports_log(self):
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(1.5)
        est = approx_fast(m, s, 1e4, 1.0, lattice=True)
        assert est.value == 0.0
        assert math.isfinite(est.log_value)
        assert est.exponent_terms[0][0] == "linear"
        assert est.exponent_terms[0][1] < 0

    def test_ratio_to_exact_fast(self):
        # light version of the theorem-restated check at n = 1e3
        lam, r, mu, u = 1.0, 1.0, 2.0, 1.0
        m, s = pg_pair(lam, r, mu), PowerScaling(1.5)
        n = 1e3
        law = exact_law(WorkedModel.poisson_gamma(lam, r, mu), s, n)
        exact = negbin_tail(law.successes, law.p, u * n)
        est = approx_fast(m, s, n, u, mode="direct", lattice=True)
        assert math.exp(exact.log_probability - est.log_value) == pytest.approx(1.0, abs=0.05)

    def test_regime_and_lattice_errors(self):
        m = pg_pair(1.0, 1.0, 2.0)
        with pytest.raises(RegimeError):
            approx_fast(m, PowerScaling(0.5), 100.0, 1.0)
        with pytest.raises(LatticeError):
            approx_fast(gp_pair(1.0, 2.0, 1.0), PowerScaling(1.5), 100.0, 1.0, lattice=True)

    def test_series_unavailable_for_custom(self):
        drift = CharExponent.custom(lambda t, o: 0.9 * t if o == 0 else (0.9 if o == 1 else 0.0))
        m = ModelPair(CharExponent.poisson(1.0), drift)
        with pytest.raises(SeriesUnavailable):
            approx_fast(m, PowerScaling(1.5), 100.0, 1.5, mode="series")


class TestApproxSlow:
    def test_poisson_gamma_display_formula(self):
        # non-lattice value = exp((1 - 1/rho + log(1/rho)) r phi + sum) / ((1/rho - 1) sqrt(2 pi r phi))
        lam, r, mu, u, f, n = 1.0, 1.0, 3.0, 1.0, 0.5, 400.0
        m, s = pg_pair(lam, r, mu), PowerScaling(f)
        est = approx_slow(m, s, n, u, mode="series", order=1, lattice=False)
        rho = lam * r / (mu * u)
        phi, psi = s.phi(n), s.psi(n)
        from twoscale import slow_series_coeffs

        _, _, wbar = slow_series_coeffs(WorkedModel.poisson_gamma(lam, r, mu), u, k_max=1)
        exponent = (1.0 - 1.0 / rho + math.log(1.0 / rho)) * r * phi + wbar[0] * phi / psi
        expected = math.exp(exponent) / ((1.0 / rho - 1.0) * math.sqrt(2.0 * math.pi * r * phi))
        assert est.value == pytest.approx(expected, rel=1e-12)

    def test_gamma_poisson_lattice_prefactor(self):
        # B is the counting clock here; the lattice adjustment reads
        # d/(1 - e^{-a tau* d}) * a / (sigma_minus sqrt(2 pi phi)), with
        # sigma_minus^2 = a^2 beta''(a tau*) = r u / mu.
        r, mu, lam, u = 1.0, 2.0, 1.0, 1.0
        m, s = gp_pair(r, mu, lam), PowerScaling(0.5)
        n = 400.0
        est = approx_slow(m, s, n, u, mode="series", order=0, lattice=True)
        a = r / mu
        ell = math.log(mu * u / (lam * r))
        tau_star = (mu / r) * ell
        sigma_minus = math.sqrt(r * u / mu)
        pref = (
            lattice_factor(a * tau_star, 1.0)
            * a
            / (sigma_minus * math.sqrt(2.0 * math.pi * s.phi(n)))
        )
        assert est.prefactor == pytest.approx(pref, rel=1e-12)
        assert est.lattice_adjusted

    def test_lattice_prefactor_converges_to_smooth(self):
        r, mu, lam = 1.0, 2.0, 1.0
        u = 1.01 * (r / mu) * lam
        m = ModelPair(CharExponent.gamma(r, mu), CharExponent.poisson(lam, lattice_span=1e-4))
        s, n = PowerScaling(0.5), 100.0
        latt = approx_slow(m, s, n, u, lattice=True)
        smooth = approx_slow(m, s, n, u, lattice=False)
        assert abs(latt.prefactor / smooth.prefactor - 1.0) <= 1e-6

    def test_ratio_to_exact_slow(self):
        lam, r, mu, u = 1.0, 1.0, 2.0, 1.0
        m, s = pg_pair(lam, r, mu), PowerScaling(0.5)
        n = 1e3
        law = exact_law(WorkedModel.poisson_gamma(lam, r, mu), s, n)
        exact = negbin_tail(law.successes, law.p, u * n)
        est = approx_slow(m, s, n, u, mode="direct", lattice=False)
        assert math.exp(exact.log_probability - est.log_value) == pytest.approx(1.0, abs=0.05)

    def test_regime_error(self):
        with pytest.raises(RegimeError):
            approx_slow(pg_pair(1.0, 1.0, 2.0), PowerScaling(1.5), 100.0, 1.0)

    def test_empty_series_under_strong_separation(self):
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(0.3)
        est = approx_slow(m, s, 1000.0, 1.0, mode="series")
        assert est.series_order == 0
        assert len(est.exponent_terms) == 1


class TestSingleTimescale:
    def test_exponent_matches_direct_at_f1(self, pg113):
        n, u = 50.0, 1.0
        s1 = PowerScaling(1.0)
        est = approx_single_timescale(pg113, n, u)
        delta = direct_exponent(pg113, s1, n, u)
        assert est.exponent == pytest.approx(delta, abs=1e-9)

    def test_twist_residual_and_variance(self, pg113):
        s1 = PowerScaling(1.0)
        sol = solve_twist(pg113, s1, 50.0, 1.0)
        assert sol.residual <= 1e-10
        # sigma_0^2 > 0 whenever u > ab
        est = approx_single_timescale(pg113, 50.0, 1.0)
        assert est.prefactor > 0

    def test_close_to_exact(self, pg113):
        # f = 1 keeps the negative binomial law exact; sanity-check the value.
        n, u = 400.0, 1.0
        law = exact_law(WorkedModel.poisson_gamma(1.0, 1.0, 3.0), PowerScaling(1.0), n)
        exact = negbin_tail(law.successes, law.p, u * n)
        est = approx_single_timescale(pg113, n, u)
        # the smooth prefactor differs from the lattice one by about theta*d/ ...;
        # only require the right order of magnitude here
        assert abs(exact.log_probability - est.log_value) < 1.0


class TestLogAsymptote:
    def test_poisson_gamma_fast_rate(self):
        lam, r, mu, u = 1.0, 1.0, 3.0, 1.0
        rate, slow = log_asymptote(pg_pair(lam, r, mu), PowerScaling(1.5), u)
        rho = lam * r / (mu * u)
        assert slow is None
        assert rate == pytest.approx((1.0 - rho + math.log(rho)) * u, rel=1e-10)

    def test_gamma_poisson_fast_rate(self):
        r, mu, lam, u = 1.0, 2.0, 1.0, 1.0
        rate, _ = log_asymptote(gp_pair(r, mu, lam), PowerScaling(2.0), u)
        rho = lam * r / (mu * u)
        assert rate == pytest.approx((1.0 - 1.0 / rho + math.log(1.0 / rho)) * lam * r, rel=1e-10)

    def test_slow_rate_slot(self):
        lam, r, mu, u = 1.0, 1.0, 3.0, 1.0
        fast, rate = log_asymptote(pg_pair(lam, r, mu), PowerScaling(0.5), u)
        assert fast is None
        rho = lam * r / (mu * u)
        assert rate == pytest.approx((1.0 - 1.0 / rho + math.log(1.0 / rho)) * r, rel=1e-10)

    @pytest.mark.parametrize("f", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("ratio", [1.1, 2.0, 5.0])
    def test_rate_strictly_negative(self, f, ratio):
        lam, r, mu = 1.0, 1.0, 3.0
        u = ratio * lam * r / mu
        rates = log_asymptote(pg_pair(lam, r, mu), PowerScaling(f), u)
        assert all(v < 0 for v in rates if v is not None)

    def test_fast_remainder_vanishes_under_strong_separation(self):
        # f > 2: the direct sublinear remainder is o(1) and already tiny at n = 1e4.
        m, s = pg_pair(1.0, 1.0, 2.0), PowerScaling(2.5)
        est = approx_fast(m, s, 1e4, 1.0, mode="direct", lattice=True)
        terms = dict(est.exponent_terms)
        assert abs(terms["sublinear_remainder"]) <= 1e-2
