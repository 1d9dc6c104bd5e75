"""Marginal transformations to near-normality and the transformed-Gaussian
component density.

Two coordinatewise families: the power transform (Yeo-Johnson, defined on all
of R) and the Manly exponential transform.  Both are strictly increasing for
every lambda, so the back-transformed density is the Gaussian density of the
transformed point times the Jacobian of the forward map.
"""

import math
from dataclasses import dataclass

import numpy as np

from .densities import GaussianParams, log_density_gaussian

__all__ = [
    "POWER",
    "MANLY",
    "TransformRangeError",
    "TransformVector",
    "TransGaussianParams",
    "transform_power",
    "transform_manly",
    "apply_transform",
    "log_jacobian",
    "log_jacobian_rows",
    "log_density_trans_gaussian",
]

POWER = "power"
MANLY = "manly"

# optimizer probes cross the branch points, so snap to the limit branch
BRANCH_TOL = 1e-10


class TransformRangeError(ValueError):
    """Manly transform overflow; the optimizer treats this as a rejected step."""


@dataclass
class TransformVector:
    """Per-coordinate transformation parameters Lambda = (lambda_1..lambda_p)."""

    kind: str
    lambdas: np.ndarray

    def __post_init__(self):
        if self.kind not in (POWER, MANLY):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        self.lambdas = np.asarray(self.lambdas, dtype=float).ravel()
        if not np.all(np.isfinite(self.lambdas)):
            raise ValueError("lambdas must be finite")

    @property
    def p(self):
        return self.lambdas.shape[0]


@dataclass
class TransGaussianParams:
    """Gaussian on the transformed scale: T(x|Lambda) ~ N(mu, sigma)."""

    transform: TransformVector
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.mu.shape[0] != self.transform.p:
            raise ValueError("transform and mu dimensions disagree")
        if self.sigma.shape != (self.p, self.p):
            raise ValueError("sigma shape disagrees with mu")

    @property
    def p(self):
        return self.mu.shape[0]


def transform_power(x, lam):
    """Yeo-Johnson transform, elementwise; four branches, continuous in both
    arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    if abs(lam) < BRANCH_TOL:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = np.expm1(lam * np.log1p(x[pos])) / lam
    if abs(lam - 2.0) < BRANCH_TOL:
        out[~pos] = -np.log1p(-x[~pos])
    else:
        out[~pos] = -np.expm1((2.0 - lam) * np.log1p(-x[~pos])) / (2.0 - lam)
    if out.ndim == 0:
        return float(out)
    return out


def transform_manly(x, lam):
    """Manly exponential transform (e^{lam x} - 1)/lam, elementwise."""
    x = np.asarray(x, dtype=float)
    if abs(lam) < BRANCH_TOL:
        return float(x) if x.ndim == 0 else x.copy()
    if np.any(np.abs(lam * x) > 700.0):
        raise TransformRangeError(f"|lambda*x| exceeds 700 for lambda={lam}")
    out = np.expm1(lam * x) / lam
    if out.ndim == 0:
        return float(out)
    return out


def apply_transform(x, t):
    """Apply t coordinatewise to a point or to each row of an (n, p) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xm = x[None, :] if single else x
    if xm.shape[1] != t.p:
        raise ValueError(f"data has dimension {xm.shape[1]}, expected {t.p}")
    fn = transform_power if t.kind == POWER else transform_manly
    out = np.column_stack([fn(xm[:, j], t.lambdas[j]) for j in range(t.p)])
    return out[0] if single else out


def log_jacobian_rows(x, t):
    """log J_T for each row of an (n, p) array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != t.p:
        raise ValueError(f"data must be (n, {t.p}), got {x.shape}")
    if t.kind == MANLY:
        return x @ t.lambdas
    return (np.sign(x) * np.log1p(np.abs(x))) @ (t.lambdas - 1.0)


def log_jacobian(x, t):
    """log J_T at a single point."""
    x = np.asarray(x, dtype=float).ravel()
    return float(log_jacobian_rows(x[None, :], t)[0])


def log_density_trans_gaussian(x, params):
    """log f_T(x) = log phi(T(x|Lambda); mu, sigma) + log J_T(x|Lambda)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xm = x[None, :] if single else x
    y = apply_transform(xm, params.transform)
    out = (log_density_gaussian(y, GaussianParams(params.mu, params.sigma))
           + log_jacobian_rows(xm, params.transform))
    return float(out[0]) if single else out
