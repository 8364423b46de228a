"""Friedman aligned-ranks test and Nemenyi post-hoc comparisons."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, rankdata, studentized_range

from .exceptions import DataError, ParameterError

# Aligned values are rounded before ranking so floating-point noise from the
# row-mean subtraction cannot split genuine ties.
ALIGN_DECIMALS = 12


@dataclass
class RankTable:
    """Rows are datasets (m), columns are algorithms (n)."""

    aligned: np.ndarray
    ranks: np.ndarray
    column_totals: np.ndarray
    row_totals: np.ndarray
    T: float
    p_value: float

    @property
    def n_datasets(self):
        return self.ranks.shape[0]

    @property
    def n_algorithms(self):
        return self.ranks.shape[1]

    @property
    def average_ranks(self):
        return self.column_totals / self.n_datasets

    @property
    def rank_dispersion(self):
        """``sum r^2 - sum_i R_i.^2 / n``, the denominator of T."""
        n = self.n_algorithms
        return float(np.sum(self.ranks ** 2) - np.sum(self.row_totals ** 2) / n)


def friedman_aligned_ranks(values, higher_is_better=True):
    """Friedman aligned-ranks statistic for an (m datasets x n algorithms) table.

    Each row is centred on its mean, all ``n*m`` aligned values are ranked
    jointly (rank 1 = best, midranks for ties) and T is referred to a
    chi-square distribution with ``n - 1`` degrees of freedom.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DataError("performance table must be 2-D (datasets x algorithms)")
    if np.isnan(values).any():
        raise DataError("performance table contains NaN")
    m, n = values.shape
    if n < 2 or m < 2:
        raise ParameterError("need at least 2 algorithms and 2 datasets")
    aligned = np.round(values - values.mean(axis=1, keepdims=True), ALIGN_DECIMALS)
    key = -aligned if higher_is_better else aligned
    ranks = rankdata(key, method="average").reshape(m, n)
    col = ranks.sum(axis=0)
    row = ranks.sum(axis=1)
    nm = n * m
    numer = (n - 1) * (np.sum(col ** 2) - n * m ** 2 * (nm + 1) ** 2 / 4.0)
    denom = nm * (nm + 1) * (2 * nm + 1) / 6.0 - np.sum(row ** 2) / n
    if abs(numer) < 1e-9 * max(1.0, abs(denom)) or denom <= 0:
        T = 0.0
    else:
        T = float(numer / denom)
    return RankTable(aligned, ranks, col, row, T, float(chi2.sf(T, n - 1)))


def nemenyi_posthoc(table):
    """Pairwise p-values from average aligned-rank differences.

    Under the null the ranks inside each dataset are exchangeable, which
    gives ``Var(R_.a - R_.b) = 2 D / (n - 1)`` for rank totals, with ``D``
    the rank dispersion.  The standardized difference times sqrt(2) is
    referred to the studentized range with ``n`` groups and infinite df.
    """
    n = table.n_algorithms
    if n < 2:
        raise ParameterError("Nemenyi comparisons need at least 2 algorithms")
    disp = table.rank_dispersion
    p = np.ones((n, n))
    if disp <= 0:
        return p
    se = np.sqrt(2.0 * disp / (n - 1)) / table.n_datasets
    avg = table.average_ranks
    for a in range(n):
        for b in range(a + 1, n):
            q = abs(avg[a] - avg[b]) / se * np.sqrt(2.0)
            p[a, b] = p[b, a] = min(1.0, float(studentized_range.sf(q, n, np.inf)))
    return p
