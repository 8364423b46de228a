"""External clustering metrics: Hungarian accuracy and pair-counting indices."""

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import DimensionError


@dataclass(frozen=True)
class PairCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


def contingency(truth, pred):
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise DimensionError(f"label vectors differ: {truth.shape} vs {pred.shape}")
    if truth.shape[0] < 2:
        raise DimensionError("need at least two samples")
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def pair_counts(truth, pred):
    table = contingency(truth, pred)
    n = int(table.sum())
    tp = sum(comb(int(x), 2) for x in table.ravel())
    same_truth = sum(comb(int(x), 2) for x in table.sum(axis=1))
    same_pred = sum(comb(int(x), 2) for x in table.sum(axis=0))
    fp = same_pred - tp
    fn = same_truth - tp
    return PairCounts(tp, fp, fn, comb(n, 2) - tp - fp - fn)


def clustering_accuracy(truth, pred):
    """Fraction of samples matched under the best one-to-one cluster/class map."""
    table = contingency(truth, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def jaccard_index(counts):
    denom = counts.tp + counts.fp + counts.fn
    # No co-clustered pair in either partition: both are all-singletons.
    return 1.0 if denom == 0 else counts.tp / denom


def fm_index(counts):
    if counts.tp == 0:
        return 1.0 if counts.fp == counts.fn == 0 else 0.0
    return sqrt(counts.tp / (counts.tp + counts.fp) * counts.tp / (counts.tp + counts.fn))


def rand_index(counts):
    return (counts.tp + counts.tn) / counts.total


def score_all(truth, pred):
    counts = pair_counts(truth, pred)
    return {
        "accuracy": clustering_accuracy(truth, pred),
        "jaccard": jaccard_index(counts),
        "fm": fm_index(counts),
        "rand": rand_index(counts),
    }
