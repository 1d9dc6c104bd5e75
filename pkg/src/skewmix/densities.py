"""Component densities: multivariate Gaussian, variance-gamma, generalized
hyperbolic.

All densities are evaluated and returned in log space; with dimensions into
the teens the raw densities underflow long before the fits get interesting.
Sampling uses the normal variance-mean construction X = mu + W*alpha +
sqrt(W)*V directly, so the samplers and the closed-form densities can be
cross-checked against each other.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln
from scipy.stats import geninvgauss

from .special import log_bessel_k

__all__ = [
    "GaussianParams",
    "VgParams",
    "GhParams",
    "QuadForms",
    "quad_forms",
    "log_density_gaussian",
    "log_density_vg",
    "log_density_gh",
    "sample_component",
]

LOG_2PI = math.log(2.0 * math.pi)


def _as_matrix(x, p):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != p:
            raise ValueError(f"point has dimension {x.shape[0]}, expected {p}")
        return x[None, :], True
    if x.ndim != 2 or x.shape[1] != p:
        raise ValueError(f"data must be (n, {p}), got {x.shape}")
    return x, False


def _cholesky_spd(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-8 * (1 + np.abs(sigma).max())):
        raise ValueError("sigma must be symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma is not positive definite") from exc


@dataclass
class GaussianParams:
    """Multivariate normal with location mu and covariance sigma."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.sigma.shape != (self.p, self.p):
            raise ValueError("mu and sigma dimensions disagree")
        _cholesky_spd(self.sigma)

    @property
    def p(self):
        return self.mu.shape[0]


@dataclass
class VgParams:
    """Variance-gamma: location mu, scale sigma, skewness alpha,
    concentration gamma (mixing W ~ Gamma(gamma, gamma))."""

    mu: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    gamma: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        if self.alpha.shape != self.mu.shape or self.sigma.shape != (self.p, self.p):
            raise ValueError("parameter dimensions disagree")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be positive")
        _cholesky_spd(self.sigma)

    @property
    def p(self):
        return self.mu.shape[0]


@dataclass
class GhParams:
    """Generalized hyperbolic: location mu, scale sigma, skewness alpha,
    index lambd, concentration omega (mixing W ~ GIG(omega, 1, lambd))."""

    mu: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    lambd: float
    omega: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        if self.alpha.shape != self.mu.shape or self.sigma.shape != (self.p, self.p):
            raise ValueError("parameter dimensions disagree")
        if not np.isfinite(self.lambd):
            raise ValueError("lambd must be finite")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive")
        _cholesky_spd(self.sigma)

    @property
    def p(self):
        return self.mu.shape[0]


@dataclass
class QuadForms:
    """delta = (x-mu)' Sigma^-1 (x-mu), rho = alpha' Sigma^-1 alpha."""

    delta: float
    rho: float


def mahalanobis_pieces(x, mu, sigma, alpha=None):
    """Quadratic forms shared by every density here, via one Cholesky factor.

    Returns (delta, lin, rho, logdet) where delta[i] is the Mahalanobis form
    of row i, lin[i] = (x_i - mu)' Sigma^-1 alpha, rho = alpha' Sigma^-1 alpha
    and logdet = log |Sigma|.  lin and rho are zero when alpha is None.

    `sigma` must already be symmetric (the parameter classes and the CM
    updates both guarantee it); only positive definiteness is checked here,
    through the factorization itself.
    """
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    diff = x - mu
    u = solve_triangular(chol, diff.T, lower=True, check_finite=False)
    delta = np.einsum("ij,ij->j", u, u)
    if alpha is None:
        return delta, np.zeros_like(delta), 0.0, logdet
    v = solve_triangular(chol, alpha, lower=True, check_finite=False)
    rho = float(v @ v)
    lin = u.T @ v
    return delta, lin, rho, logdet


def quad_forms(x, params):
    """Mahalanobis and skewness quadratic forms for a single point."""
    alpha = getattr(params, "alpha", None)
    xm, _ = _as_matrix(x, params.p)
    delta, _, rho, _ = mahalanobis_pieces(xm, params.mu, params.sigma, alpha)
    return QuadForms(delta=float(delta[0]), rho=float(rho))


def log_density_gaussian(x, params):
    """Multivariate normal log-density; accepts one point or an (n, p) array."""
    xm, single = _as_matrix(x, params.p)
    delta, _, _, logdet = mahalanobis_pieces(xm, params.mu, params.sigma)
    out = -0.5 * (params.p * LOG_2PI + logdet + delta)
    return float(out[0]) if single else out


def log_density_vg(x, params):
    """Variance-gamma log-density.

    At x = mu the density has a finite limit when gamma > p/2, evaluated
    analytically; when gamma <= p/2 the density is unbounded there and +inf
    is returned as the boundary flag.
    """
    xm, single = _as_matrix(x, params.p)
    delta, lin, rho, logdet = mahalanobis_pieces(xm, params.mu, params.sigma,
                                                 params.alpha)
    out = _vg_logpdf_from_pieces(delta, lin, rho, logdet, params.gamma, params.p)
    return float(out[0]) if single else out


def _vg_logpdf_from_pieces(delta, lin, rho, logdet, gamma, p, log_k_nu=None):
    # log_k_nu, when given, must be log K_nu(sqrt(psi*delta)) for every row;
    # the conditional E-step passes it in because the same Bessel values feed
    # the latent-moment computation
    nu = gamma - 0.5 * p
    psi = rho + 2.0 * gamma
    const = (math.log(2.0) + gamma * math.log(gamma) - 0.5 * p * LOG_2PI
             - 0.5 * logdet - float(gammaln(gamma)))
    pos = delta > 0.0
    if pos.all():
        if log_k_nu is None:
            log_k_nu = log_bessel_k(nu, np.sqrt(psi * delta))
        return (const + lin + 0.5 * nu * (np.log(delta) - math.log(psi))
                + log_k_nu)
    out = np.empty_like(delta)
    if np.any(pos):
        d = delta[pos]
        z = np.sqrt(psi * d)
        out[pos] = (const + lin[pos] + 0.5 * nu * (np.log(d) - math.log(psi))
                    + log_bessel_k(nu, z))
    if nu > 0.0:
        # limit of (delta/psi)^(nu/2) K_nu(sqrt(psi delta)) as delta -> 0
        limit = (-math.log(2.0) + float(gammaln(nu))
                 + nu * (math.log(2.0) - math.log(psi)))
        out[~pos] = const + lin[~pos] + limit
    else:
        out[~pos] = math.inf
    return out


def log_density_gh(x, params):
    """Generalized hyperbolic log-density (always finite for omega > 0)."""
    xm, single = _as_matrix(x, params.p)
    delta, lin, rho, logdet = mahalanobis_pieces(xm, params.mu, params.sigma,
                                                 params.alpha)
    out = _gh_logpdf_from_pieces(delta, lin, rho, logdet, params.lambd,
                                 params.omega, params.p)
    return float(out[0]) if single else out


def _gh_logpdf_from_pieces(delta, lin, rho, logdet, lambd, omega, p,
                           log_k_nu=None):
    nu = lambd - 0.5 * p
    psi = rho + omega
    chi = delta + omega
    if log_k_nu is None:
        log_k_nu = log_bessel_k(nu, np.sqrt(psi * chi))
    return (lin - 0.5 * p * LOG_2PI - 0.5 * logdet - log_bessel_k(lambd, omega)
            + 0.5 * nu * (np.log(chi) - math.log(psi)) + log_k_nu)


def _sample_gig(rng, omega, lambd, n):
    # GIG(omega, 1, lambd): scipy's geninvgauss(p=lambd, b=omega) is exactly
    # this parameterization and uses an exact rejection sampler
    return geninvgauss.rvs(lambd, omega, size=n, random_state=rng)


def sample_component(params, n, seed):
    """Draw n i.i.d. rows via X = mu + W*alpha + sqrt(W)*V.

    `seed` may be an int or a numpy Generator; results are deterministic
    given an int seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = params.p
    chol = _cholesky_spd(params.sigma)
    if isinstance(params, GaussianParams):
        w = np.ones(n)
        alpha = np.zeros(p)
    elif isinstance(params, VgParams):
        w = rng.gamma(shape=params.gamma, scale=1.0 / params.gamma, size=n)
        alpha = params.alpha
    elif isinstance(params, GhParams):
        w = _sample_gig(rng, params.omega, params.lambd, n)
        alpha = params.alpha
    else:
        raise TypeError(f"unsupported component parameters: {type(params)!r}")
    v = rng.standard_normal((n, p)) @ chol.T
    return params.mu + w[:, None] * alpha + np.sqrt(w)[:, None] * v
