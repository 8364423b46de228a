"""Ng-Jordan-Weiss spectral clustering with a seeded k-means++ back end."""

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .exceptions import DataError, ParameterError
from .numerics import rng_stream

DEGREE_GUARD = 1e-12
KMEANS_TOL = 1e-9
KMEANS_MAX_ITER = 300


def gaussian_affinity(X, sigma="auto"):
    """``exp(-d^2 / (2 sigma^2))`` with a zero diagonal.

    ``sigma="auto"`` takes the median pairwise distance (1.0 if every point
    coincides).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("gaussian_affinity needs at least two points")
    dist = pdist(X)
    if isinstance(sigma, str):
        if sigma != "auto":
            raise ParameterError(f"sigma must be a positive number or 'auto', got {sigma!r}")
        sigma = float(np.median(dist)) or 1.0
    elif not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    A = squareform(np.exp(-dist ** 2 / (2.0 * sigma ** 2)))
    np.fill_diagonal(A, 0.0)
    return A


def normalized_laplacian(A):
    d = A.sum(axis=1) + DEGREE_GUARD
    inv_sqrt = 1.0 / np.sqrt(d)
    L = -(inv_sqrt[:, None] * A * inv_sqrt[None, :])
    L[np.diag_indices_from(L)] += 1.0
    return L


def _canonical(labels):
    """Rename clusters in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse]


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _lloyd(X, centers):
    k = centers.shape[0]
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            mask = labels == j
            if mask.any():
                new[j] = X[mask].mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its centroid.
                far = d2[np.arange(X.shape[0]), labels].argmax()
                new[j] = X[far]
                labels[far] = j
        shift = np.max(np.abs(new - centers))
        centers = new
        if shift <= KMEANS_TOL:
            break
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    return labels, centers, inertia


def kmeans(points, k, seed=0, restarts=20):
    """Best-of-``restarts`` Lloyd k-means; returns ``(labels, inertia)``.

    Ties in inertia keep the earliest restart.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not 1 <= k <= X.shape[0]:
        raise ParameterError(f"k must lie in [1, {X.shape[0]}], got {k}")
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        labels, _, inertia = _lloyd(X, _kmeans_pp(X, k, rng_stream(seed, r)))
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return _canonical(best_labels), best_inertia


def spectral_embedding(X, k, sigma="auto"):
    L = normalized_laplacian(gaussian_affinity(X, sigma))
    _, vecs = np.linalg.eigh(L)
    U = vecs[:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / np.where(norms > 0, norms, 1.0)


def spectral_cluster(X, k, seed=0, sigma="auto", restarts=20):
    X = np.asarray(X, dtype=np.float64)
    if not 1 <= k <= X.shape[0]:
        raise ParameterError(f"k must lie in [1, {X.shape[0]}], got {k}")
    labels, _ = kmeans(spectral_embedding(X, k, sigma), k, seed, restarts)
    return labels


class SpectralClustering(ClusterMixin, BaseEstimator):
    def __init__(self, n_clusters=2, sigma="auto", n_init=20, random_state=0):
        self.n_clusters = n_clusters
        self.sigma = sigma
        self.n_init = n_init
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.labels_ = spectral_cluster(X, self.n_clusters, self.random_state, self.sigma,
                                        self.n_init)
        return self
