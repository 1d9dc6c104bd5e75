"""Multivariate normality diagnostics and partition agreement measures.

Mardia's skewness ``b1p`` and kurtosis ``b2p`` are Mahalanobis-standardized
third and fourth moments; under multivariate normality ``b1p`` is near zero
(``n*b1p/6`` is asymptotically chi-square) and ``b2p`` is near ``p(p+2)``
(reported here as the excess ``b2p - p(p+2)`` with an asymptotic normal
test).  The adjusted Rand index and confusion matrix summarize agreement
between an estimated partition and reference labels.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import chi2, norm

__all__ = [
    "MardiaReport",
    "mardia",
    "adjusted_rand_index",
    "confusion_matrix",
]


@dataclass(frozen=True)
class MardiaReport:
    """Skewness/kurtosis summaries with normality-test p-values."""

    b1p: float
    b1p_pvalue: float
    excess_kurtosis: float
    kurt_pvalue: float
    n: int
    p: int

    def __post_init__(self):
        if self.b1p < 0:
            raise ValueError("b1p must be nonnegative")
        for name in ("b1p_pvalue", "kurt_pvalue"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def mardia(data):
    """Mardia skewness/kurtosis report for an (n, p) sample.

    Uses the unbiased covariance (divisor n-1), which is what the
    reported benchmark tables round to at n=50.  The skewness is
    computed through the standardized moment tensor: with y_i the
    Mahalanobis-whitened observations,

        b1p = sum_{abc} [ (1/n) sum_i y_ia y_ib y_ic ]^2,

    which equals the double sum (1/n^2) sum_{ij} [(x_i-m)'S^-1(x_j-m)]^3
    but costs O(n p^3) instead of O(n^2 p).
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D array")
    n, p = x.shape
    if n <= p:
        raise ValueError(f"need n > p observations, got n={n}, p={p}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "singular sample covariance; Mardia statistics undefined"
        ) from exc
    y = solve_triangular(chol, centered.T, lower=True).T

    tensor = np.einsum("ia,ib,ic->abc", y, y, y) / n
    b1p = float((tensor ** 2).sum())
    sq = (y ** 2).sum(axis=1)
    b2p = float((sq ** 2).mean())

    skew_stat = n * b1p / 6.0
    skew_df = p * (p + 1) * (p + 2) / 6.0
    b1p_pvalue = float(chi2.sf(skew_stat, skew_df))

    excess = b2p - p * (p + 2)
    z = excess / np.sqrt(8.0 * p * (p + 2) / n)
    kurt_pvalue = float(2.0 * norm.sf(abs(z)))
    return MardiaReport(b1p=b1p, b1p_pvalue=b1p_pvalue,
                        excess_kurtosis=excess, kurt_pvalue=kurt_pvalue,
                        n=n, p=p)


def _pair_count(counts):
    counts = np.asarray(counts, dtype=float)
    return float((counts * (counts - 1)).sum() / 2.0)


def adjusted_rand_index(labels_a, labels_b):
    """Hubert-Arabie adjusted Rand index between two partitions."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    table = np.zeros((ka, kb))
    np.add.at(table, (ai, bi), 1.0)

    index = _pair_count(table.ravel())
    sum_a = _pair_count(table.sum(axis=1))
    sum_b = _pair_count(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b) - expected
    if maximum == 0.0:
        # both partitions put everything in one cluster: identical
        return 1.0
    return float((index - expected) / maximum)


def confusion_matrix(true_labels, fitted_labels):
    """Counts of true class (rows) by fitted cluster (columns).

    True classes appear in sorted label order; fitted clusters in order of
    first appearance, matching how reported tables list an estimated
    partition against reference classes.
    """
    t = np.asarray(true_labels).ravel()
    f = np.asarray(fitted_labels).ravel()
    if t.shape[0] != f.shape[0]:
        raise ValueError(
            f"label vectors differ in length: {t.shape[0]} vs {f.shape[0]}")
    classes, ti = np.unique(t, return_inverse=True)
    order = {}
    fi = np.array([order.setdefault(v, len(order)) for v in f.tolist()])
    out = np.zeros((classes.size, len(order)), dtype=int)
    np.add.at(out, (ti, fi), 1)
    return out
