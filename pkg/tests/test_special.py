"""Oracle-based tests for the Bessel-K / GIG layer.

The quadrature oracles here work directly from integral representations and
never call the implementation's Bessel path, so they stay independent.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from skewmix.special import (
    GigParams,
    digamma,
    gig_log_norm_and_moments,
    gig_moments_vector,
    log_bessel_k,
    log_bessel_k_dnu,
    log_gamma_fn,
)


def _logcosh(u):
    u = abs(u)
    return u + np.log1p(np.exp(-2 * u)) - math.log(2.0)


def oracle_log_k(nu, x):
    """log K_nu(x) from the integral representation, via shifted quadrature."""
    nu = abs(nu)

    def f(t):
        return -x * np.cosh(t) + _logcosh(nu * t)

    hi = np.arcsinh(max(nu, 1.0) / x) + 7.0
    r = minimize_scalar(lambda t: -f(t), bounds=(0.0, hi), method="bounded",
                        options={"xatol": 1e-14})
    tstar, fmax = r.x, f(r.x)
    t_hi = tstar + 1.0
    while f(t_hi) - fmax > -800 and t_hi < 1e4:
        t_hi = 2.0 * t_hi + 1.0
    val, _ = quad(lambda t: np.exp(f(t) - fmax), 0.0, t_hi, limit=400,
                  epsabs=1e-13, epsrel=1e-13, points=[tstar])
    return fmax + math.log(val)


def oracle_gig(chi, psi, nu):
    """(log_norm, E[W], E[1/W], E[log W]) by quadrature in u = log w."""

    def g(u, k=0.0):
        return (nu + k) * u - 0.5 * (psi * np.exp(u) + chi * np.exp(-u))

    r = minimize_scalar(lambda u: -g(u), bounds=(-200, 200), method="bounded",
                        options={"xatol": 1e-13})
    ustar, gmax = r.x, g(r.x)

    def integral(k=0.0, logw=False):
        if logw:
            fn = lambda u: u * np.exp(g(u) - gmax)
        else:
            fn = lambda u: np.exp(g(u, k) - gmax)
        v, _ = quad(fn, ustar - 60, ustar + 60, limit=400, epsabs=1e-13,
                    epsrel=1e-13, points=[ustar])
        return v

    z = integral()
    return (gmax + math.log(z), integral(1.0) / z, integral(-1.0) / z,
            integral(logw=True) / z)


class TestLogBesselK:
    def test_half_integer_closed_form(self):
        # K_{1/2}(x) = sqrt(pi/(2x)) exp(-x)
        assert log_bessel_k(0.5, 2.0) == pytest.approx(0.5 * math.log(math.pi / 4) - 2.0,
                                                       abs=1e-12)

    def test_symmetry_in_order(self):
        assert log_bessel_k(-3.0, 1.7) == log_bessel_k(3.0, 1.7)
        for nu in [0.25, 1.0, 7.5, 42.0, 199.0]:
            for x in [1e-6, 0.3, 5.0, 2e3]:
                assert log_bessel_k(-nu, x) == pytest.approx(log_bessel_k(nu, x),
                                                             abs=1e-12)

    def test_spec_point_against_quadrature(self):
        # frozen from oracle_log_k(2.5, 10.0)
        frozen = -10.640322251618633
        assert oracle_log_k(2.5, 10.0) == pytest.approx(frozen, rel=1e-12)
        assert log_bessel_k(2.5, 10.0) == pytest.approx(frozen, rel=1e-10)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 3.3, 12.0, 60.0, 150.5, 200.0])
    @pytest.mark.parametrize("x", [1e-8, 1e-4, 0.05, 1.0, 4.3, 37.0, 900.0, 1e4])
    def test_accuracy_sweep(self, nu, x):
        o = oracle_log_k(nu, x)
        assert log_bessel_k(nu, x) == pytest.approx(o, rel=1e-10, abs=1e-10)

    def test_recurrence(self):
        # K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x), rearranged in log space
        rng = np.random.default_rng(7)
        for _ in range(200):
            nu = rng.uniform(0.5, 150.0)
            x = math.exp(rng.uniform(math.log(1e-4), math.log(1e3)))
            la, lb, lc = (log_bessel_k(nu + 1, x), log_bessel_k(nu - 1, x),
                          log_bessel_k(nu, x))
            # divide through by K_{nu+1}: 1 = exp(lb-la) + (2 nu/x) exp(lc-la)
            lhs = math.exp(lb - la) + (2 * nu / x) * math.exp(lc - la)
            assert lhs == pytest.approx(1.0, rel=1e-9)

    def test_vectorized_matches_scalar(self):
        xs = np.array([1e-6, 0.1, 3.0, 250.0])
        v = log_bessel_k(1.7, xs)
        assert np.allclose(v, [log_bessel_k(1.7, float(x)) for x in xs], rtol=0,
                           atol=1e-13)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_bessel_k(1.0, 0.0)
        with pytest.raises(ValueError):
            log_bessel_k(1.0, -2.0)
        with pytest.raises(ValueError):
            log_bessel_k(math.nan, 1.0)
        with pytest.raises(ValueError):
            log_bessel_k(1.0, math.inf)

    def test_all_finite_on_domain(self):
        nus = np.linspace(-200, 200, 41)
        xs = np.geomspace(1e-8, 1e4, 49)
        for nu in nus:
            vals = log_bessel_k(nu, xs)
            assert np.all(np.isfinite(vals))

    def test_dnu_symmetry_and_sign(self):
        # log K is even in nu: derivative vanishes at 0 and is odd
        assert log_bessel_k_dnu(0.0, 2.3) == pytest.approx(0.0, abs=1e-9)
        assert log_bessel_k_dnu(-1.2, 2.3) == pytest.approx(
            -log_bessel_k_dnu(1.2, 2.3), abs=1e-9)


class TestGammaFunctions:
    def test_log_gamma_trivials(self):
        assert log_gamma_fn(1.0) == pytest.approx(0.0, abs=1e-14)
        assert log_gamma_fn(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-13)

    def test_digamma_euler_mascheroni(self):
        # psi(1) = -euler_gamma; oracle from the harmonic-series expansion
        n = 10 ** 7
        k = np.arange(1, n + 1)
        euler = float(np.sum(1.0 / k[::-1])) - math.log(n) - 0.5 / n + 1.0 / (12.0 * n * n)
        assert euler == pytest.approx(0.5772156649015329, abs=1e-12)
        assert digamma(1.0) == pytest.approx(-euler, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            log_gamma_fn(0.0)
        with pytest.raises(ValueError):
            digamma(-1.0)


class TestGigMoments:
    def test_ratio_one_at_symmetric_order(self):
        # K symmetry forces E[W] = K_{1/2}/K_{-1/2} = 1 at chi=psi, nu=-1/2
        _, e_w, _, _ = gig_log_norm_and_moments(GigParams(2.0, 2.0, -0.5))
        assert e_w == pytest.approx(1.0, abs=1e-12)

    def test_log_w_symmetry_at_nu_zero(self):
        # the GIG density is symmetric in log w only at nu = 0 (and chi = psi)
        _, _, _, e_log_w = gig_log_norm_and_moments(GigParams(2.0, 2.0, 0.0))
        assert e_log_w == pytest.approx(0.0, abs=1e-10)

    def test_log_w_against_oracle_at_spec_point(self):
        # frozen from oracle_gig(2, 2, -0.5); the density in log w is *not*
        # symmetric at nu = -1/2, so the value is nonzero
        frozen = -0.20634564990105575
        o = oracle_gig(2.0, 2.0, -0.5)
        assert o[3] == pytest.approx(frozen, rel=1e-9)
        _, _, _, e_log_w = gig_log_norm_and_moments(GigParams(2.0, 2.0, -0.5))
        assert e_log_w == pytest.approx(frozen, rel=1e-7)

    @pytest.mark.parametrize("chi,psi,nu", [
        (1.0, 4.0, 1.5),
        (2.0, 2.0, -0.5),
        (0.3, 7.0, -2.2),
        (5.0, 0.5, 3.0),
    ])
    def test_all_moments_against_quadrature(self, chi, psi, nu):
        o = oracle_gig(chi, psi, nu)
        m = gig_log_norm_and_moments(GigParams(chi, psi, nu))
        for got, want in zip(m[:3], o[:3]):
            assert got == pytest.approx(want, rel=1e-8)
        # e_log_w carries the fixed-step finite-difference truncation (~2e-9)
        assert m[3] == pytest.approx(o[3], rel=1e-8, abs=5e-9)

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            chi = math.exp(rng.uniform(-6, 4))
            psi = math.exp(rng.uniform(-6, 4))
            nu = rng.uniform(-30, 30)
            _, e_w, e_inv_w, e_log_w = gig_log_norm_and_moments(
                GigParams(chi, psi, nu))
            assert e_w * e_inv_w >= 1.0 - 1e-12
            assert np.isfinite(e_w) and np.isfinite(e_inv_w) and np.isfinite(e_log_w)

    def test_gamma_limit(self):
        # chi = 0, nu > 0 is Gamma(nu, rate=psi/2)
        nu, psi = 3.0, 4.0
        log_norm, e_w, e_inv_w, e_log_w = gig_log_norm_and_moments(
            GigParams(0.0, psi, nu))
        rate = psi / 2
        assert e_w == pytest.approx(nu / rate, rel=1e-12)
        assert e_inv_w == pytest.approx(rate / (nu - 1), rel=1e-12)
        assert e_log_w == pytest.approx(digamma(nu) - math.log(rate), rel=1e-12)
        assert log_norm == pytest.approx(log_gamma_fn(nu) - nu * math.log(rate),
                                         rel=1e-12)
        # continuity: tiny chi approaches the limit
        m_small = gig_log_norm_and_moments(GigParams(1e-12, psi, nu))
        assert m_small[1] == pytest.approx(e_w, rel=1e-4)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            GigParams(-1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            GigParams(0.0, 1.0, -0.5)
        with pytest.raises(ValueError):
            GigParams(1.0, 0.0, 0.5)

    def test_vectorized_matches_scalar(self):
        chi = np.array([0.2, 1.0, 9.0])
        e_w, e_inv_w, e_log_w = gig_moments_vector(chi, 3.0, -1.2)
        for i, c in enumerate(chi):
            _, a, b, cl = gig_log_norm_and_moments(GigParams(float(c), 3.0, -1.2))
            assert e_w[i] == pytest.approx(a, rel=1e-12)
            assert e_inv_w[i] == pytest.approx(b, rel=1e-12)
            assert e_log_w[i] == pytest.approx(cl, rel=1e-10)
