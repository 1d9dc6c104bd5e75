"""ECM fitting of G-component mixtures for five component families:
Gaussian, variance-gamma, generalized hyperbolic, and Manly/power
transformed Gaussian.

The E-step computes responsibilities by log-sum-exp and, for the two
variance-mean mixture families, the conditional expectations a = E[W|x],
b = E[1/W|x], c = E[log W|x] under the posterior GIG law of the latent
mixing variable.  The CM sweep updates weights, then (mu, alpha) jointly
in closed form, then Sigma, then the family's shape parameters: gamma by
a 1-D root solve with the p/2 floor against the unbounded-likelihood
problem, (lambda, omega) by two coordinate sweeps, and the transform
vector Lambda by a short Nelder-Mead search of the profiled component
log-likelihood.

Convergence uses the relative rule (l(t+1) - l(t)) / |l(t+1)| < tol on
successive E-step log-likelihoods.  Degenerate runs (singular component
covariance, empty component, non-finite density) are returned as failed
fits rather than raised.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dpotrf as _dpotrf
from scipy.optimize import brentq
from scipy.special import digamma as _digamma_raw
from scipy.special import kve

from .densities import (
    GaussianParams,
    GhParams,
    VgParams,
    _gh_logpdf_from_pieces,
    _vg_logpdf_from_pieces,
    mahalanobis_pieces,
)
from .special import (
    digamma,
    gig_moments_and_bessel,
    gig_moments_vector,
    log_bessel_k,
    log_bessel_k_dnu,
)
from .transforms import (
    MANLY,
    POWER,
    TransformRangeError,
    TransformVector,
    TransGaussianParams,
)

__all__ = [
    "GAUSSIAN",
    "VG",
    "GH",
    "FAMILIES",
    "MixtureSpec",
    "MixtureFit",
    "EstepError",
    "DegenerateComponentError",
    "e_step",
    "cm_steps",
    "fit_once",
    "count_params",
    "bic",
]

GAUSSIAN = "gaussian"
VG = "vg"
GH = "gh"
FAMILIES = (GAUSSIAN, VG, GH, MANLY, POWER)

LOG_2PI = math.log(2.0 * math.pi)

GAMMA_BRACKET = (1e-3, 200.0)
LAMBDA_BRACKET = (-200.0, 200.0)
OMEGA_BRACKET = (1e-3, 500.0)
SIMPLEX_MAX_ITER = 50
# Conditional-maximization only needs the inner search to improve the
# profiled objective well below the outer stopping rule's resolution
# (relative change 1e-4); two orders tighter leaves the EM trajectory's
# stopping decisions unchanged while saving most simplex iterations.
SIMPLEX_FTOL = 1e-7
# Initial simplex spread for the transform search.  The first cycle explores
# at the full step; once the warm-started search settles, each cycle's
# simplex is sized to twice the previous cycle's accepted movement (floored
# below), so late cycles start near-converged and the ftol test exits the
# simplex loop after a handful of contractions instead of the full budget.
# Progress is not throttled by a small step: the simplex doubles its reach
# every expansion, so a step that proves too small recovers within a few
# evaluations and the next cycle re-sizes from the observed movement.
SIMPLEX_STEP = 0.1
SIMPLEX_STEP_MIN = 0.002


class EstepError(RuntimeError):
    """Non-finite density or empty posterior row; identifies the culprit."""


class DegenerateComponentError(RuntimeError):
    """Singular or empty component; the run is marked failed."""


@dataclass
class MixtureSpec:
    family: str
    g: int
    max_iter: int = 2000
    tol: float = 1e-4

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.g < 1:
            raise ValueError("g must be >= 1")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")


@dataclass
class MixtureFit:
    spec: MixtureSpec
    weights: np.ndarray
    components: list
    loglik: float
    loglik_trace: list
    responsibilities: np.ndarray
    n_params: int
    bic: float
    converged: bool
    init_id: int
    failed: bool = False
    failure: str | None = None

    def hard_labels(self):
        return np.argmax(self.responsibilities, axis=1)


def count_params(family, g, p):
    """Free-parameter count M: mixing weights + per-component location/scale
    plus the family's extras."""
    base = (g - 1) + g * p + g * p * (p + 1) // 2
    extra = {GAUSSIAN: 0, VG: g * (p + 1), GH: g * (p + 2),
             MANLY: g * p, POWER: g * p}[family]
    return base + extra


def bic(loglik, m, n):
    """m ln n - 2 loglik; lower is better."""
    if n <= 0:
        raise ValueError("n must be positive")
    return m * math.log(n) - 2.0 * loglik


# ----------------------------------------------------------------- scratch

def _make_scratch(x, family):
    if family == POWER:
        absl = np.log1p(np.abs(x))
        pos = x >= 0
        return {"log1p_abs": absl, "pos": pos,
                "sign": np.where(pos, 1.0, -1.0),
                "signed_log1p": np.sign(x) * absl}
    return {}


def _trans_apply(x, scratch, family, lambdas):
    """Whole-matrix transform; TransformRangeError on Manly overflow.

    Columns whose effective exponent sits within 1e-10 of the branch point
    take the limit form, mirroring the public transform functions exactly.
    """
    lam = np.asarray(lambdas, dtype=float)
    small_lam = np.abs(lam) < 1e-10
    if family == MANLY:
        prod = x * lam
        if np.abs(prod).max(initial=0.0) > 700.0:
            j = int(np.argmax(np.abs(prod).max(axis=0) > 700.0))
            raise TransformRangeError(
                f"|lambda*x| exceeds 700 in coordinate {j}")
        if not small_lam.any():
            return np.expm1(prod) / lam
        y = np.expm1(prod) / np.where(small_lam, 1.0, lam)
        return np.where(small_lam, x, y)
    big_l = scratch["log1p_abs"]
    pos = scratch["pos"]
    d = np.where(pos, lam, 2.0 - lam)
    if not (small_lam.any() or (np.abs(2.0 - lam) < 1e-10).any()):
        y = np.expm1(big_l * d) / d
        return np.where(pos, y, -y)
    small = np.abs(d) < 1e-10
    y = np.expm1(big_l * d) / np.where(small, 1.0, d)
    y = np.where(small, big_l, y)
    return np.where(pos, y, -y)


def _trans_apply_quick(x, scratch, family, lam, out=None, dbuf=None):
    """Transform map for line-search objectives only: no branch-limit forms
    and no range checks.  An exponent at exactly a branch point or a Manly
    overflow yields non-finite values, which make the objective non-finite
    and the trial point rejected; the accepted optimum is always re-applied
    through the strict _trans_apply.  `out` / `dbuf` are optional scratch
    arrays shaped like `x`, reused by a caller that evaluates many trial
    vectors."""
    if family == MANLY:
        y = np.multiply(x, lam, out=out)
        np.expm1(y, out=y)
        return np.divide(y, lam, out=y)
    s = scratch["sign"]
    d = np.multiply(s, lam - 1.0, out=dbuf)
    np.add(d, 1.0, out=d)
    y = np.multiply(scratch["log1p_abs"], d, out=out)
    np.expm1(y, out=y)
    np.divide(y, d, out=y)
    return np.multiply(y, s, out=y)


def _trans_log_jacobian(x, scratch, family, lambdas):
    if family == MANLY:
        return x @ lambdas
    return scratch["signed_log1p"] @ (lambdas - 1.0)


# ------------------------------------------------------------------ E-step

def _component_log_pdf(x, scratch, comp, family, want_latent):
    """(log f (n,), latent (a, b, c) or None) for one component."""
    p = x.shape[1]
    if family == GAUSSIAN:
        delta, _, _, logdet = mahalanobis_pieces(x, comp.mu, comp.sigma)
        return -0.5 * (p * LOG_2PI + logdet + delta), None
    if family in (MANLY, POWER):
        t = comp.transform
        y = _trans_apply(x, scratch, family, t.lambdas)
        delta, _, _, logdet = mahalanobis_pieces(y, comp.mu, comp.sigma)
        logf = (-0.5 * (p * LOG_2PI + logdet + delta)
                + _trans_log_jacobian(x, scratch, family, t.lambdas))
        return logf, None
    delta, lin, rho, logdet = mahalanobis_pieces(x, comp.mu, comp.sigma,
                                                 comp.alpha)
    if family == VG:
        nu = comp.gamma - 0.5 * p
        psi = rho + 2.0 * comp.gamma
        chi = delta
    else:
        nu = comp.lambd - 0.5 * p
        psi = rho + comp.omega
        chi = delta + comp.omega
    strict = chi > 0
    if want_latent and strict.all():
        # one Bessel pass serves both the density and the latent moments
        lk, a, b, c = gig_moments_and_bessel(chi, psi, nu)
        if family == VG:
            logf = _vg_logpdf_from_pieces(delta, lin, rho, logdet, comp.gamma,
                                          p, log_k_nu=lk)
        else:
            logf = _gh_logpdf_from_pieces(delta, lin, rho, logdet, comp.lambd,
                                          comp.omega, p, log_k_nu=lk)
        return logf, (a, b, c)
    if family == VG:
        logf = _vg_logpdf_from_pieces(delta, lin, rho, logdet, comp.gamma, p)
    else:
        logf = _gh_logpdf_from_pieces(delta, lin, rho, logdet, comp.lambd,
                                      comp.omega, p)
    if not want_latent:
        return logf, None
    a = np.empty_like(chi)
    b = np.empty_like(chi)
    c = np.empty_like(chi)
    if np.any(strict):
        a[strict], b[strict], c[strict] = gig_moments_vector(chi[strict], psi, nu)
    # chi = 0: posterior degenerates to Gamma(nu, psi/2); only reachable
    # for VG with x exactly at mu and nu > 0 (else the density is +inf)
    if nu <= 1.0:
        b0 = math.inf
    else:
        b0 = 0.5 * psi / (nu - 1.0)
    a[~strict] = 2.0 * nu / psi if nu > 0 else math.inf
    b[~strict] = b0
    c[~strict] = (digamma(nu) - math.log(0.5 * psi)) if nu > 0 else -math.inf
    return logf, (a, b, c)


def _e_core(x, scratch, weights, components, family, want_latent):
    n = x.shape[0]
    g = len(components)
    logmat = np.empty((n, g))
    lat_a = lat_b = lat_c = None
    latent_families = family in (VG, GH)
    if want_latent and latent_families:
        lat_a = np.empty((n, g))
        lat_b = np.empty((n, g))
        lat_c = np.empty((n, g))
    for j, comp in enumerate(components):
        logf, lat = _component_log_pdf(x, scratch, comp, family,
                                       want_latent and latent_families)
        # nan and +inf both surface in the max; -inf (zero density) is fine
        mx = float(logf.max(initial=-math.inf))
        if mx == math.inf or math.isnan(mx):
            bad = np.isnan(logf) | (logf == math.inf)
            i = int(np.argmax(bad))
            raise EstepError(
                f"non-finite log-density (component {j}, point {i})")
        logmat[:, j] = math.log(weights[j]) + logf
        if lat is not None:
            lat_a[:, j], lat_b[:, j], lat_c[:, j] = lat
    peak = logmat.max(axis=1)
    if np.any(peak == -math.inf):
        i = int(np.argmax(peak == -math.inf))
        raise EstepError(f"zero mixture density at point {i}")
    lse = peak + np.log(np.exp(logmat - peak[:, None]).sum(axis=1))
    z = np.exp(logmat - lse[:, None])
    loglik = float(lse.sum())
    latent = None
    if lat_a is not None:
        latent = {"a": lat_a, "b": lat_b, "c": lat_c}
    return z, loglik, latent


def e_step(data, weights, components):
    """Responsibilities, observed log-likelihood, and latent-W expectations.

    Returns (z, loglik, latent); latent is a dict with (n, G) arrays "a",
    "b", "c" for the VG/GH families and None otherwise.
    """
    x = np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    family = _family_of(components[0])
    scratch = _make_scratch(x, family)
    return _e_core(x, scratch, weights, components, family, True)


def _family_of(comp):
    if isinstance(comp, GaussianParams):
        return GAUSSIAN
    if isinstance(comp, VgParams):
        return VG
    if isinstance(comp, GhParams):
        return GH
    if isinstance(comp, TransGaussianParams):
        return comp.transform.kind
    raise TypeError(f"unknown component type {type(comp)!r}")


# --------------------------------------------------------------- CM pieces

# Two complementary singularity tests, applied to the Cholesky pivots of
# every accepted component covariance.
#
# Spread of the squared pivots beyond ~1/sqrt(eps): the condition number is
# at least that large, so quadratic forms and log-densities computed through
# the factor retain less than half of double precision — the matrix is
# singular for every purpose this code puts it to.  Transformation families
# can reach such states with nothing collapsing in the correlation sense, by
# inflating one coordinate's scale ~e^|lambda| (the log-Jacobian term pays
# for the inflation), so the raw, scale-sensitive spread is the right test.
COND_LIMIT = 1e8
#
# Conditional-variance share below 1e-3: dividing the pivots by the marginal
# standard deviations gives the pivots of the correlation matrix, whose
# squares are each coordinate's conditional variance share given the
# preceding ones.  A share under 1e-3 (conditional spread below ~3% of the
# marginal) asserts near-affine determinism finer than the granularity of
# data recorded to 2–3 significant digits; mixtures only reach it by
# collapsing a component onto a few nearly affinely dependent points, the
# classic spurious-likelihood artifact, and such components can buy hundreds
# of log-likelihood units from the vanishing conditional variance.  Data
# with genuine conditional determinism beyond this (extreme collinearity)
# is not fittable with full-covariance components in the first place.
COLLAPSE_FLOOR = 1e-3


def _collapsed(sigma, chol):
    piv = chol.diagonal()
    if (piv.max() / piv.min()) ** 2 > COND_LIMIT:
        return True
    rel = piv / np.sqrt(sigma.diagonal())
    return float(rel.min()) ** 2 < COLLAPSE_FLOOR


def _spd_or_fail(sigma, budget=None):
    """Cholesky check with one round of diagonal jitter, then failure.

    `budget` is a single-element list holding the run's jitter allowance.
    The first rescue in a run consumes it; any later Cholesky failure fails
    the run outright.  A one-off failure is numerical noise worth patching,
    but a component whose covariance needs propping up iteration after
    iteration is collapsing onto a degenerate configuration, and letting the
    jitter floor stabilize it would turn an unbounded-likelihood artifact
    into the apparent best fit."""
    p = sigma.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    try:
        if _collapsed(sigma, np.linalg.cholesky(sigma)):
            raise DegenerateComponentError(
                "numerically singular component covariance")
        return sigma
    except np.linalg.LinAlgError:
        pass
    if budget is not None and not budget[0]:
        raise DegenerateComponentError("repeated covariance collapse")
    tr = float(np.trace(sigma))
    if not (np.isfinite(tr) and tr > 0):
        raise DegenerateComponentError("non-finite or non-positive covariance")
    sigma = sigma + (1e-8 * tr / p) * np.eye(p)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise DegenerateComponentError("singular component covariance") from exc
    if _collapsed(sigma, chol):
        raise DegenerateComponentError(
            "numerically singular component covariance")
    if budget is not None:
        budget[0] = False
    return sigma


def _weighted_mean_cov(x, w):
    n_g = float(w.sum())
    if n_g < 1e-10:
        raise DegenerateComponentError("empty component")
    mean = (w @ x) / n_g
    xc = x - mean
    cov = (xc.T * w) @ xc / n_g
    return mean, cov, n_g


def _update_gamma(abar, cbar, p):
    """Root of ln(g) + 1 - psi(g) + cbar - abar on the bracket, then the p/2
    floor from the infinite-likelihood guard."""
    shift = cbar - abar

    def h(g):
        # bracketed g is always positive, so the raw digamma ufunc is safe
        return math.log(g) + 1.0 - float(_digamma_raw(g)) + shift

    lo, hi = GAMMA_BRACKET
    if h(hi) >= 0.0:
        gam = hi
    elif h(lo) <= 0.0:
        gam = lo
    else:
        gam = brentq(h, lo, hi, xtol=1e-10, rtol=1e-12)
    return max(gam, 0.5 * p)


def _update_gh_shape(abar, bbar, cbar, lambd, omega):
    """Two coordinate sweeps on (lambda, omega).

    lambda matches d log K_lambda(omega) / d lambda = cbar (the derivative is
    increasing in lambda, so the root is unique); omega solves
    (K_{l-1} + K_{l+1})/(2 K_l) = (abar + bbar)/2 (the left side decreases
    to 1, so that root is unique too).  Both solves bracket the root by
    geometric expansion around the incumbent value: the root rarely moves far
    between sweeps, and evaluating the objectives near the fixed outer bounds
    (where the Bessel function over- or underflows into the slow series
    route) is what would otherwise dominate the cost.
    """
    half_sum = 0.5 * (abar + bbar)
    for _ in range(2):

        def dl(lam):
            return log_bessel_k_dnu(lam, omega) - cbar

        cap_lo, cap_hi = LAMBDA_BRACKET
        w = 2.0
        lo = max(lambd - w, cap_lo)
        f_lo = dl(lo)
        while f_lo >= 0.0 and lo > cap_lo:
            w *= 4.0
            lo = max(lambd - w, cap_lo)
            f_lo = dl(lo)
        if f_lo >= 0.0:
            lambd = cap_lo
        else:
            w = 2.0
            hi = min(lambd + w, cap_hi)
            f_hi = dl(hi)
            while f_hi <= 0.0 and hi < cap_hi:
                w *= 4.0
                hi = min(lambd + w, cap_hi)
                f_hi = dl(hi)
            if f_hi <= 0.0:
                lambd = cap_hi
            else:
                lambd = brentq(dl, lo, hi, xtol=1e-9, rtol=1e-11)

        orders = np.array([abs(lambd - 1.0), abs(lambd), abs(lambd + 1.0)])

        def ratio(om):
            lo_v, mid_v, hi_v = kve(orders, om)
            if (0.0 < lo_v < math.inf and 0.0 < mid_v < math.inf
                    and 0.0 < hi_v < math.inf):
                lk = math.log(mid_v) - om
                return (0.5 * math.exp((math.log(lo_v) - om) - lk)
                        + 0.5 * math.exp((math.log(hi_v) - om) - lk)
                        - half_sum)
            lk = log_bessel_k(lambd, om)
            return (0.5 * math.exp(log_bessel_k(lambd - 1.0, om) - lk)
                    + 0.5 * math.exp(log_bessel_k(lambd + 1.0, om) - lk)
                    - half_sum)

        cap_lo, cap_hi = OMEGA_BRACKET
        hi_o = min(omega * 4.0, cap_hi)
        f_hi = ratio(hi_o)
        while f_hi >= 0.0 and hi_o < cap_hi:
            hi_o = min(hi_o * 16.0, cap_hi)
            f_hi = ratio(hi_o)
        if f_hi >= 0.0:
            omega = cap_hi
        else:
            lo_o = max(omega / 4.0, cap_lo)
            f_lo = ratio(lo_o)
            while f_lo <= 0.0 and lo_o > cap_lo:
                lo_o = max(lo_o / 16.0, cap_lo)
                f_lo = ratio(lo_o)
            if f_lo <= 0.0:
                omega = cap_lo
            else:
                omega = brentq(ratio, lo_o, hi_o, xtol=1e-9, rtol=1e-11)
    return lambd, omega


def _nelder_mead(fn, x0, step, max_iter, ftol_rel=1e-9):
    """Minimal Nelder-Mead; returns the best vertex ever seen, so the result
    never falls below fn(x0) and the CM step stays monotone."""

    def guarded(v):
        # nan would poison the vertex ordering and the final argmin below;
        # an objective that is not a number is as bad as an infinite one
        w = fn(v)
        return w if w == w else math.inf

    p = len(x0)
    verts = [np.array(x0, dtype=float)]
    for j in range(p):
        v = np.array(x0, dtype=float)
        v[j] += step
        verts.append(v)
    vals = [guarded(v) for v in verts]
    idx = list(range(p + 1))
    for _ in range(max_iter):
        idx.sort(key=vals.__getitem__)
        verts = [verts[k] for k in idx]
        vals = [vals[k] for k in idx]
        if vals[-1] - vals[0] <= ftol_rel * (1.0 + abs(vals[0])):
            break
        centroid = sum(verts[:-1]) / p
        xr = centroid + (centroid - verts[-1])
        fr = guarded(xr)
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - verts[-1])
            fe = guarded(xe)
            if fe < fr:
                verts[-1], vals[-1] = xe, fe
            else:
                verts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            verts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (verts[-1] - centroid)
            fc = guarded(xc)
            if fc < min(fr, vals[-1]):
                verts[-1], vals[-1] = xc, fc
            else:
                best = verts[0]
                for k in range(1, p + 1):
                    verts[k] = best + 0.5 * (verts[k] - best)
                    vals[k] = guarded(verts[k])
    k = min(range(p + 1), key=vals.__getitem__)
    return verts[k], vals[k]


def _update_transform(x, scratch, family, z_g, n_g, prev_lambdas,
                      budget=None, step=SIMPLEX_STEP):
    """Maximize the profiled component log-likelihood over Lambda.

    For trial Lambda the Gaussian (mu, Sigma) are profiled out at their
    weighted ML values, leaving -(n_g/2)(log|S| + p(log 2pi + 1)) plus the
    responsibility-weighted log-Jacobian.
    """
    n, p = x.shape
    # the log-Jacobian is linear in Lambda with Lambda-free row features, so
    # its responsibility-weighted sum collapses to one precomputed p-vector
    jw = z_g @ (x if family == MANLY else scratch["signed_log1p"])
    offset = 0.5 * n_g * p * (LOG_2PI + 1.0)
    zn = z_g / n_g
    # scratch arrays reused across the simplex evaluations
    ybuf = np.empty_like(x)
    dbuf = np.empty_like(x) if family == POWER else None
    wbuf = np.empty((p, n))
    # Fortran order lets dpotrf factor in place instead of copying; the
    # matrix is symmetric, so the implied transpose is immaterial
    cbuf = np.empty((p, p), order="F")
    mlog = math.log

    def neg_profile(lambdas):
        y = _trans_apply_quick(x, scratch, family, lambdas, ybuf, dbuf)
        mean = zn @ y
        np.subtract(y, mean, out=y)
        np.multiply(y.T, zn, out=wbuf)
        np.matmul(wbuf, y, out=cbuf)
        # dpotrf only touches the lower triangle; info != 0 covers both the
        # not-positive-definite case and malformed input
        chol, info = _dpotrf(cbuf, lower=1, clean=0, overwrite_a=1)
        if info != 0:
            return math.inf
        logdet = 2.0 * sum(map(mlog, chol.diagonal().tolist()))
        jac = float(jw @ (lambdas if family == MANLY else lambdas - 1.0))
        return 0.5 * n_g * logdet + offset - jac

    # overflow or a branch-point hit inside the quick transform is rejected
    # through the objective's non-finite value, not reported as a warning
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        best, val = _nelder_mead(neg_profile, prev_lambdas, step,
                                 SIMPLEX_MAX_ITER, ftol_rel=SIMPLEX_FTOL)
    if not np.isfinite(val):
        raise DegenerateComponentError("transform search found no valid step")
    y = _trans_apply(x, scratch, family, best)
    mean, cov, _ = _weighted_mean_cov(y, z_g)
    return best, mean, _spd_or_fail(cov, budget)


# The CM sweep rebuilds every component each iteration from freshly computed
# arrays whose shapes are fixed by construction and whose scale matrix has
# just passed _spd_or_fail, so the dataclass __post_init__ re-validation is
# skipped on this path.

def _gaussian_component(mu, sigma):
    c = GaussianParams.__new__(GaussianParams)
    c.mu, c.sigma = mu, sigma
    return c


def _vg_component(mu, sigma, alpha, gamma):
    c = VgParams.__new__(VgParams)
    c.mu, c.sigma, c.alpha, c.gamma = mu, sigma, alpha, gamma
    return c


def _gh_component(mu, sigma, alpha, lambd, omega):
    c = GhParams.__new__(GhParams)
    c.mu, c.sigma, c.alpha, c.lambd, c.omega = mu, sigma, alpha, lambd, omega
    return c


def _cm_core(x, z, latent, family, components, budget=None, tsteps=None):
    n, p = x.shape
    g = z.shape[1]
    weights = z.mean(axis=0)
    if np.any(weights <= 0):
        raise DegenerateComponentError("vanishing mixing proportion")
    scratch = _make_scratch(x, family) if family in (MANLY, POWER) else {}
    out = []
    for j in range(g):
        z_g = z[:, j]
        if family == GAUSSIAN:
            mean, cov, _ = _weighted_mean_cov(x, z_g)
            out.append(_gaussian_component(mean, _spd_or_fail(cov, budget)))
            continue
        if family in (MANLY, POWER):
            prev = (components[j].transform.lambdas if components is not None
                    else np.full(p, 1.0 if family == POWER else 0.0))
            st = SIMPLEX_STEP if tsteps is None else tsteps[j]
            lam, mean, cov = _update_transform(x, scratch, family, z_g,
                                               float(z_g.sum()), prev,
                                               budget, st)
            if tsteps is not None:
                tsteps[j] = min(SIMPLEX_STEP,
                                max(SIMPLEX_STEP_MIN,
                                    2.0 * float(np.abs(lam - prev).max())))
            out.append(TransGaussianParams(TransformVector(family, lam),
                                           mean, cov))
            continue
        a_g = latent["a"][:, j]
        b_g = latent["b"][:, j]
        c_g = latent["c"][:, j]
        n_g = float(z_g.sum())
        if n_g < 1e-10:
            raise DegenerateComponentError("empty component")
        abar = float(z_g @ a_g) / n_g
        bbar = float(z_g @ b_g) / n_g
        cbar = float(z_g @ c_g) / n_g
        xbar = (z_g @ x) / n_g
        denom_w = z_g * (abar * b_g - 1.0)
        denom = float(denom_w.sum())
        if denom > 1e-10 * n_g:
            mu = (denom_w @ x) / denom
            alpha = ((z_g * (bbar - b_g)) @ x) / denom
        else:
            # posterior W is numerically degenerate; Gaussian-like fallback
            mu = xbar
            alpha = np.zeros(p)
        xc = x - mu
        cov = (xc.T * (z_g * b_g)) @ xc / n_g
        d = xbar - mu
        cov = cov - np.outer(d, alpha) - np.outer(alpha, d) \
            + abar * np.outer(alpha, alpha)
        cov = _spd_or_fail(cov, budget)
        if family == VG:
            gam = _update_gamma(abar, cbar, p)
            out.append(_vg_component(mu, cov, alpha, gam))
        else:
            lambd, omega = _update_gh_shape(abar, bbar, cbar,
                                            components[j].lambd
                                            if components is not None else 1.0,
                                            components[j].omega
                                            if components is not None else 2.0)
            out.append(_gh_component(mu, cov, alpha, lambd, omega))
    return weights, out


def cm_steps(data, responsibilities, latent, family, components=None):
    """One CM sweep; returns (components, weights).

    `components` carries the previous parameters, used to warm-start the
    transform search and the GH shape sweep; omitted, the neutral starting
    values are used.
    """
    x = np.asarray(data, dtype=float)
    z = np.asarray(responsibilities, dtype=float)
    weights, comps = _cm_core(x, z, latent, family, components)
    return comps, weights


# ---------------------------------------------------------------- fit_once

def _init_responsibilities(init, n, g):
    assignment = np.asarray(init.assignment)
    if assignment.ndim == 1:
        labels = assignment.astype(int)
        if labels.shape[0] != n:
            raise ValueError("init labels length disagrees with data")
        if not np.array_equal(np.unique(labels), np.arange(g)):
            raise ValueError("hard init must cover all groups 0..G-1")
        z = np.zeros((n, g))
        z[np.arange(n), labels] = 1.0
        return z
    z = assignment.astype(float)
    if z.shape != (n, g):
        raise ValueError(f"soft init must be ({n}, {g}), got {z.shape}")
    if np.any(z < 0) or not np.allclose(z.sum(axis=1), 1.0, atol=1e-8):
        raise ValueError("soft init rows must be nonnegative and sum to 1")
    return z


def _init_components(x, z, family, budget=None):
    n, p = x.shape
    comps = []
    for j in range(z.shape[1]):
        mean, cov, _ = _weighted_mean_cov(x, z[:, j])
        cov = _spd_or_fail(cov, budget)
        if family == GAUSSIAN:
            comps.append(GaussianParams(mean, cov))
        elif family == VG:
            comps.append(VgParams(mean, cov, np.zeros(p),
                                  max(2.0, 0.5 * p + 0.5)))
        elif family == GH:
            comps.append(GhParams(mean, cov, np.zeros(p), 1.0, 2.0))
        else:
            lam = np.full(p, 1.0 if family == POWER else 0.0)
            comps.append(TransGaussianParams(TransformVector(family, lam),
                                             mean, cov))
    return comps


def _failed_fit(spec, init_id, n, p, reason):
    return MixtureFit(spec=spec, weights=np.full(spec.g, math.nan),
                      components=[], loglik=-math.inf, loglik_trace=[],
                      responsibilities=np.zeros((n, spec.g)),
                      n_params=count_params(spec.family, spec.g, p),
                      bic=math.inf, converged=False, init_id=init_id,
                      failed=True, failure=reason)


def fit_once(data, spec, init):
    """Run ECM from one starting partition; returns a MixtureFit (failed
    fits are returned, not raised)."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D array")
    n, p = x.shape
    init_id = getattr(init, "id", -1)
    z = _init_responsibilities(init, n, spec.g)
    try:
        scratch = _make_scratch(x, spec.family)
        weights = z.mean(axis=0)
        if np.any(weights <= 0):
            raise DegenerateComponentError("empty init component")
        # one jitter rescue is allowed over the whole run, start included
        budget = [True]
        comps = _init_components(x, z, spec.family, budget)
        trace = []
        prev = None
        converged = False
        latent_family = spec.family in (VG, GH)
        tsteps = ([SIMPLEX_STEP] * spec.g
                  if spec.family in (MANLY, POWER) else None)
        for _ in range(spec.max_iter):
            z, ll, latent = _e_core(x, scratch, weights, comps, spec.family,
                                    latent_family)
            trace.append(ll)
            if prev is not None and (ll - prev) / max(abs(ll), 1e-300) < spec.tol:
                converged = True
                break
            prev = ll
            weights, comps = _cm_core(x, z, latent, spec.family, comps,
                                      budget, tsteps)
    except (EstepError, DegenerateComponentError, TransformRangeError) as exc:
        return _failed_fit(spec, init_id, n, p, str(exc))
    except ValueError as exc:
        # e.g. a CM update produced a non-SPD scale before _spd_or_fail saw it
        return _failed_fit(spec, init_id, n, p, str(exc))
    m = count_params(spec.family, spec.g, p)
    return MixtureFit(spec=spec, weights=weights, components=comps,
                      loglik=trace[-1], loglik_trace=trace,
                      responsibilities=z, n_params=m,
                      bic=bic(trace[-1], m, n), converged=converged,
                      init_id=init_id)
