"""Cluster-separation maps via per-group density estimation and simulation.

For each labelled group a density is estimated either by a small Gaussian
mixture (components chosen by BIC) or by a Gaussian-product kernel density
estimate with per-coordinate bandwidths

    h_j = (4/(p+2))^(1/(p+4)) * n^(-1/(p+4)) * sd_j.

N points are then simulated from each group's estimate and classified to
the group maximizing prior times estimated density; the resulting G x G
row-stochastic matrix P (the misclassification map) quantifies pairwise
cluster overlap: entry (g, h) is the share of group-g simulations claimed
by group h.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .em import MixtureSpec
from .init import InitBattery, _splitmix64, run_battery

__all__ = [
    "GAUSSMIX",
    "KDE",
    "GroupDensityEstimate",
    "OverlapMap",
    "estimate_group_density",
    "kde_log_density",
    "log_density",
    "misclassification_map",
    "misclassification_map_from_labels",
    "pairwise_overlap",
]

GAUSSMIX = "gaussmix"
KDE = "kde"

LOG_2PI = np.log(2.0 * np.pi)

# deterministic battery for the per-group Gaussian mixture fits
_DENSITY_BATTERY = InitBattery(kmeans_count=3, soft_count=10,
                               hard_per_group=5, use_ward=True,
                               master_seed=0)


@dataclass
class GroupDensityEstimate:
    """Estimated density of one labelled group with its mixing proportion."""

    method: str
    group_id: int
    prior: float
    # KDE branch
    sample: np.ndarray | None = None
    bandwidths: np.ndarray | None = None
    # Gaussian-mixture branch
    weights: np.ndarray | None = None
    means: np.ndarray | None = None
    covariances: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in (GAUSSMIX, KDE):
            raise ValueError(f"unknown density method: {self.method!r}")
        if not 0.0 < self.prior <= 1.0:
            raise ValueError("prior must lie in (0, 1]")
        if self.method == KDE:
            if self.sample is None or self.bandwidths is None:
                raise ValueError("KDE estimate needs sample and bandwidths")
            if np.any(self.bandwidths <= 0):
                raise ValueError("bandwidths must be strictly positive")
        else:
            if self.weights is None or self.means is None \
                    or self.covariances is None:
                raise ValueError("Gaussian-mixture estimate needs "
                                 "weights, means and covariances")
            if abs(self.weights.sum() - 1.0) > 1e-8 or np.any(self.weights < 0):
                raise ValueError("mixture weights must lie on the simplex")

    @property
    def p(self):
        if self.method == KDE:
            return self.sample.shape[1]
        return self.means.shape[1]

    @property
    def n_components(self):
        """Number of Gaussian components (J); 0 for a KDE estimate."""
        return 0 if self.method == KDE else self.weights.shape[0]


@dataclass
class OverlapMap:
    """Row-stochastic G x G misclassification probabilities."""

    p_matrix: np.ndarray
    n_sim: int
    method: str
    seed: int

    def __post_init__(self):
        m = np.asarray(self.p_matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("p_matrix must be square")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("entries must lie in [0, 1]")
        if not np.allclose(m.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("rows must sum to 1")
        self.p_matrix = m

    @property
    def g(self):
        return self.p_matrix.shape[0]


def _kde_bandwidths(x, coordinate_sd=None):
    n, p = x.shape
    factor = (4.0 / (p + 2)) ** (1.0 / (p + 4)) * n ** (-1.0 / (p + 4))
    sd = x.std(axis=0, ddof=1) if coordinate_sd is None \
        else np.asarray(coordinate_sd, dtype=float)
    return factor * sd


def estimate_group_density(group_data, prior, method, group_id=0, j_max=3,
                           coordinate_sd=None):
    """Estimate one group's density by KDE or a BIC-selected Gaussian mixture.

    ``coordinate_sd`` overrides the per-variable standard deviations in the
    KDE bandwidth rule; pass the whole sample's standard deviations when
    the group is one of several labelled subsets of a dataset (the
    variable-level scale the bandwidth display refers to).
    """
    x = np.asarray(group_data, dtype=float)
    if x.ndim != 2:
        raise ValueError("group_data must be a 2-D array")
    n, p = x.shape
    if n < p + 2:
        raise ValueError(
            f"group needs at least p+2={p + 2} points, got {n}")
    if method == KDE:
        h = _kde_bandwidths(x, coordinate_sd)
        if np.any(h <= 0):
            raise ValueError("degenerate group: zero variance in some "
                             "coordinate, KDE bandwidth undefined")
        return GroupDensityEstimate(method=KDE, group_id=group_id,
                                    prior=prior, sample=x, bandwidths=h)
    if method != GAUSSMIX:
        raise ValueError(f"unknown density method: {method!r}")

    best = None
    for j in range(1, j_max + 1):
        if n < j * (p + 2):
            break
        try:
            res = run_battery(x, MixtureSpec("gaussian", j), _DENSITY_BATTERY)
        except RuntimeError:
            continue
        if best is None or res.best.bic < best.bic:
            best = res.best
    if best is None:
        raise RuntimeError(
            f"no Gaussian mixture fit succeeded for group {group_id}")
    weights = np.asarray(best.weights, dtype=float)
    means = np.stack([c.mu for c in best.components])
    covs = np.stack([c.sigma for c in best.components])
    return GroupDensityEstimate(method=GAUSSMIX, group_id=group_id,
                                prior=prior, weights=weights, means=means,
                                covariances=covs)


def kde_log_density(est, x):
    """Log KDE density at one point or at each row of a matrix."""
    if est.method != KDE:
        raise ValueError("estimate is not a KDE")
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    h = est.bandwidths
    p = h.shape[0]
    const = -0.5 * p * LOG_2PI - np.log(h).sum() - np.log(est.sample.shape[0])
    scaled_sample = est.sample / h
    out = np.empty(pts.shape[0])
    # blockwise to bound the (block, n, p) intermediate
    block = max(1, int(2 ** 22 // max(1, est.sample.shape[0] * p)))
    for start in range(0, pts.shape[0], block):
        chunk = pts[start:start + block] / h
        z = chunk[:, None, :] - scaled_sample[None, :, :]
        quad = (z ** 2).sum(axis=2)
        out[start:start + block] = logsumexp(-0.5 * quad, axis=1) + const
    return float(out[0]) if single else out


def _gaussmix_log_density(est, pts):
    m = pts.shape[0]
    comp = np.empty((m, est.n_components))
    for j in range(est.n_components):
        chol = np.linalg.cholesky(est.covariances[j])
        diff = pts - est.means[j]
        sol = solve_triangular(chol, diff.T, lower=True)
        quad = (sol ** 2).sum(axis=0)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        comp[:, j] = (np.log(est.weights[j]) - 0.5 * quad
                      - 0.5 * est.p * LOG_2PI - 0.5 * logdet)
    return logsumexp(comp, axis=1)


def log_density(est, x):
    """Log estimated density at one point or at each row of a matrix."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if est.method == KDE:
        out = kde_log_density(est, pts)
    else:
        out = _gaussmix_log_density(est, pts)
    return float(out[0]) if single else out


def _simulate(est, n_sim, rng):
    if est.method == KDE:
        idx = rng.integers(0, est.sample.shape[0], size=n_sim)
        noise = rng.standard_normal((n_sim, est.p)) * est.bandwidths
        return est.sample[idx] + noise
    counts = rng.multinomial(n_sim, est.weights)
    parts = []
    for j, cnt in enumerate(counts):
        if cnt == 0:
            continue
        chol = np.linalg.cholesky(est.covariances[j])
        parts.append(est.means[j]
                     + rng.standard_normal((cnt, est.p)) @ chol.T)
    return np.vstack(parts)


def misclassification_map(estimates, n_sim, seed):
    """Simulate from each group and classify under all groups' densities."""
    if not estimates:
        raise ValueError("need at least one group estimate")
    if n_sim < 1:
        raise ValueError("n_sim must be at least 1")
    methods = {est.method for est in estimates}
    if len(methods) > 1:
        raise ValueError("all estimates must use the same method")
    dims = {est.p for est in estimates}
    if len(dims) > 1:
        raise ValueError("all estimates must share the same dimension")
    g = len(estimates)
    log_priors = np.log([est.prior for est in estimates])
    p_matrix = np.empty((g, g))
    for gi, est in enumerate(estimates):
        rng = np.random.default_rng(_splitmix64(seed, gi))
        pts = _simulate(est, n_sim, rng)
        scores = np.empty((n_sim, g))
        for h in range(g):
            scores[:, h] = log_priors[h] + log_density(estimates[h], pts)
        # argmax breaks ties at the smallest index
        claimed = np.argmax(scores, axis=1)
        p_matrix[gi] = np.bincount(claimed, minlength=g) / n_sim
    return OverlapMap(p_matrix=p_matrix, n_sim=n_sim,
                      method=next(iter(methods)), seed=seed)


def misclassification_map_from_labels(data, labels, method, n_sim, seed,
                                      j_max=3):
    """Estimate per-group densities from labelled data and build the map.

    Group priors are the empirical proportions; groups appear in sorted
    label order.
    """
    x = np.asarray(data, dtype=float)
    lab = np.asarray(labels).ravel()
    if x.shape[0] != lab.shape[0]:
        raise ValueError("data and labels differ in length")
    uniq = np.unique(lab)
    # KDE bandwidths use the whole sample's per-variable scale
    sd = x.std(axis=0, ddof=1) if method == KDE else None
    ests = []
    for gi, val in enumerate(uniq):
        sel = x[lab == val]
        prior = sel.shape[0] / x.shape[0]
        ests.append(estimate_group_density(sel, prior, method,
                                           group_id=gi, j_max=j_max,
                                           coordinate_sd=sd))
    return misclassification_map(ests, n_sim, seed)


def pairwise_overlap(overlap_map, g, h):
    """Total mutual misclassification between two groups."""
    if g == h:
        raise ValueError("pairwise overlap needs two distinct groups")
    m = overlap_map.p_matrix
    if not (0 <= g < m.shape[0] and 0 <= h < m.shape[0]):
        raise IndexError("group index out of range")
    return float(m[g, h] + m[h, g])
