"""Log-domain Bessel-K evaluation and generalized inverse Gaussian moments.

The variance-gamma and generalized hyperbolic densities, and the conditional
expectations inside their ECM fits, all reduce to evaluating the modified
Bessel function of the second kind K_nu at sometimes extreme arguments, and to
low-order moments of the generalized inverse Gaussian (GIG) distribution.
Everything here is pure and vectorizes over the Bessel argument.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma as _scipy_digamma
from scipy.special import gammaln, kve

__all__ = [
    "GigParams",
    "log_bessel_k",
    "log_bessel_k_dnu",
    "log_gamma_fn",
    "digamma",
    "gig_log_norm_and_moments",
]

# Central finite-difference step for d/dnu log K_nu(x).
_DNU_STEP = 1e-5


def log_bessel_k(nu, x):
    """log K_nu(x) for real order nu and positive argument x.

    Uses the exponentially scaled kve from scipy (log kve - x).  Where the
    scaled value overflows a double (large |nu| together with small x), falls
    back to the ascending small-argument series

        K_nu(x) = (1/2) Gamma(nu) (x/2)^(-nu) * S(nu, x),
        S = sum_k (-x^2/4)^k / (k! (nu-1)(nu-2)...(nu-k)),

    which converges rapidly precisely in that regime.

    Parameters
    ----------
    nu : float
        Order; K is symmetric in nu so only |nu| matters.
    x : float or ndarray
        Argument, must be strictly positive and finite.

    Returns
    -------
    float or ndarray
        log K_nu(x).
    """
    nu = float(nu)
    if not math.isfinite(nu):
        raise ValueError("log_bessel_k: order nu must be finite")
    anu = abs(nu)
    if type(x) is float:
        # scalar hot path: every invalid or overflowing argument makes kve
        # non-positive or non-finite, so the guarded branch catches them all
        v = float(kve(anu, x))
        if 0.0 < v < math.inf:
            return math.log(v) - x
        return float(_log_k_repair(anu, np.array([x]), np.array([math.nan]))[0])
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.log(kve(anu, x)) - x
    if not np.isfinite(out).all():
        out = _log_k_repair(anu, x, out)
    return float(out) if scalar else out


def _log_k_repair(anu, x, out):
    """Validate the argument and patch non-finite entries with the series."""
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("log_bessel_k: argument x must be positive and finite")
    bad = ~np.isfinite(out)
    return np.where(bad, _log_k_small_x(anu, np.where(bad, x, 1.0)), out)


def _log_k_small_x(nu, x):
    """Ascending-series log K_nu(x); valid where kve overflows (nu >> x).

    Outside that regime the truncated series can lose positivity; the log
    then yields nan, which callers surface as a failed evaluation instead of
    a silently wrong finite value.
    """
    q = 0.25 * x * x
    s = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, 40):
        if nu - k <= 0.5:
            break
        term = term * (-q) / (k * (nu - k))
        s = s + term
        if np.all(np.abs(term) < 1e-17 * np.abs(s)):
            break
    with np.errstate(invalid="ignore", divide="ignore"):
        return gammaln(nu) - math.log(2.0) - nu * (np.log(x) - math.log(2.0)) \
            + np.log(s)


def log_bessel_k_dnu(nu, x, step=_DNU_STEP):
    """d/dnu log K_nu(x) by central finite difference (fixed step)."""
    if type(x) is float and x > 0.0:
        # one ufunc call for the difference pair; fall through on over/underflow
        hi, lo = kve((abs(nu + step), abs(nu - step)), x)
        if 0.0 < hi < math.inf and 0.0 < lo < math.inf:
            return ((math.log(hi) - x) - (math.log(lo) - x)) / (2.0 * step)
    return (log_bessel_k(nu + step, x) - log_bessel_k(nu - step, x)) / (2.0 * step)


def log_gamma_fn(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(~np.isfinite(x)):
        raise ValueError("log_gamma_fn: x must be positive and finite")
    out = gammaln(x)
    return float(out) if out.ndim == 0 else out


def digamma(x):
    """Digamma psi(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(~np.isfinite(x)):
        raise ValueError("digamma: x must be positive and finite")
    out = _scipy_digamma(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GigParams:
    """Parameters of GIG(chi, psi, nu) with density proportional to
    w^(nu-1) exp(-(psi*w + chi/w)/2) on w > 0.

    chi = 0 is allowed only with nu > 0 (the gamma limit).
    """

    chi: float
    psi: float
    nu: float

    def __post_init__(self):
        chi, psi, nu = self.chi, self.psi, self.nu
        if not (np.isfinite(chi) and np.isfinite(psi) and np.isfinite(nu)):
            raise ValueError("GigParams: parameters must be finite")
        if psi <= 0.0:
            raise ValueError("GigParams: psi must be positive")
        if chi < 0.0 or (chi == 0.0 and nu <= 0.0):
            raise ValueError("GigParams: chi must be positive, or zero with nu > 0")


def gig_log_norm_and_moments(g):
    """Log normalizer and first moments of a GIG distribution.

    Returns
    -------
    tuple
        (log_normalizer, e_w, e_inv_w, e_log_w) where log_normalizer is the
        log of the integral of w^(nu-1) exp(-(psi*w + chi/w)/2) over w > 0,
        and the remaining entries are E[W], E[1/W], E[log W].

    Notes
    -----
    At chi = 0 the distribution is Gamma(nu, rate=psi/2); its moments are used
    directly instead of limiting Bessel ratios.  E[1/W] is +inf there when
    nu <= 1, which is the mathematically exact value.
    """
    if not isinstance(g, GigParams):
        g = GigParams(*g)
    chi, psi, nu = g.chi, g.psi, g.nu
    if chi == 0.0:
        rate = 0.5 * psi
        log_norm = gammaln(nu) - nu * math.log(rate)
        e_w = nu / rate
        e_inv_w = rate / (nu - 1.0) if nu > 1.0 else math.inf
        e_log_w = float(_scipy_digamma(nu)) - math.log(rate)
        return float(log_norm), float(e_w), e_inv_w, e_log_w

    s = math.sqrt(chi * psi)
    log_r = 0.5 * (math.log(chi) - math.log(psi))
    lk = log_bessel_k(nu, s)
    e_w = math.exp(log_r + log_bessel_k(nu + 1.0, s) - lk)
    e_inv_w = math.exp(-log_r + log_bessel_k(nu - 1.0, s) - lk)
    e_log_w = log_bessel_k_dnu(nu, s) + log_r
    log_norm = math.log(2.0) + lk + nu * log_r
    return float(log_norm), float(e_w), float(e_inv_w), float(e_log_w)


def gig_moments_and_bessel(chi, psi, nu):
    """(log K_nu(s_i), E[W], E[1/W], E[log W]) for GIG(chi_i, psi, nu), where
    s_i = sqrt(chi_i psi).

    `chi` is an array of positive values; `psi` and `nu` are scalars.  This
    is the hot path of the conditional E-step for the variance-mixture
    families: the moments need K at orders |nu|, |nu| +- 1 and the
    finite-difference pair, and the component density needs log K_nu(s)
    itself, so everything is served from one broadcast kve call.  Only four
    orders are evaluated directly; K at |nu| + 1 follows from the three-term
    recurrence K_{m+1}(x) = K_{|m-1|}(x) + (2m/x) K_m(x), whose terms are
    all positive, making the log-space addition cancellation-free.  Entries
    where the scaled kve overflows are patched order by order with the
    ascending series.
    """
    chi = np.asarray(chi, dtype=float)
    nu = float(nu)
    m = abs(nu)
    lpsi = math.log(psi)
    s = np.sqrt(chi * psi)
    log_chi = np.log(chi)
    log_r = 0.5 * (log_chi - lpsi)
    log_s = 0.5 * (log_chi + lpsi)
    orders = np.array([abs(m - 1.0), m, abs(m - _DNU_STEP), m + _DNU_STEP])
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        lk = np.log(kve(orders[:, None], s[None, :])) - s
    if not np.isfinite(lk).all():
        for i in range(orders.shape[0]):
            bad = ~np.isfinite(lk[i])
            if bad.any():
                lk[i] = np.where(
                    bad,
                    _log_k_small_x(float(orders[i]), np.where(bad, s, 1.0)),
                    lk[i],
                )
    lk_adj, lk_m, lk_lo, lk_hi = lk
    if m > 0.0:
        lk_up = np.logaddexp(lk_adj, math.log(2.0 * m) - log_s + lk_m)
    else:
        lk_up = lk_adj
    # |nu + 1| is the recurrence order for nu >= 0 and the directly evaluated
    # adjacent order for nu < 0 (and vice versa for |nu - 1|); the derivative
    # d log K / d nu is odd in nu, so the difference flips sign with it
    if nu >= 0.0:
        e_w = np.exp(log_r + lk_up - lk_m)
        e_inv_w = np.exp(-log_r + lk_adj - lk_m)
        dld = lk_hi - lk_lo
    else:
        e_w = np.exp(log_r + lk_adj - lk_m)
        e_inv_w = np.exp(-log_r + lk_up - lk_m)
        dld = lk_lo - lk_hi
    e_log_w = dld / (2.0 * _DNU_STEP) + log_r
    return lk_m, e_w, e_inv_w, e_log_w


def gig_moments_vector(chi, psi, nu):
    """Vectorized (E[W], E[1/W], E[log W]) for GIG(chi_i, psi, nu)."""
    return gig_moments_and_bessel(chi, psi, nu)[1:]
