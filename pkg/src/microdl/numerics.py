"""Seeded random streams, nonlinearities, sampling and the KL divergence."""

import numpy as np

from .exceptions import DimensionError, ParameterError

PROB_EPS = 1e-7


def rng_stream(seed, *key):
    """Return a reproducible Philox generator for ``seed`` and child ``key``.

    Streams with the same ``(seed, key)`` produce identical sequences on every
    platform; distinct keys give statistically independent streams, so
    parallel experiment cells can each own one.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def stream_id(seed, *key):
    return "/".join(str(int(k)) for k in (seed, *key))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # Split by sign so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def clamp_prob(p):
    return np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def kl_divergence(p, q):
    """Sum of ``p * ln(p / q)`` over the given "on" probabilities.

    Both inputs are clamped first. Only the listed probabilities enter the
    sum (no complementary ``1 - p`` terms), so the result can be negative
    unless ``p`` and ``q`` each sum to one.
    """
    p = clamp_prob(p)
    q = clamp_prob(q)
    if p.shape != q.shape:
        raise DimensionError(f"kl_divergence: shape mismatch {p.shape} vs {q.shape}")
    return float(np.sum(p * (np.log(p) - np.log(q))))


def bernoulli_sample(p, rng):
    p = np.asarray(p, dtype=np.float64)
    return (rng.random(p.shape) < p).astype(np.float64)


def gaussian_sample(mean, sigma, rng):
    if not sigma > 0:
        raise ParameterError(f"gaussian_sample: sigma must be > 0, got {sigma}")
    mean = np.asarray(mean, dtype=np.float64)
    return mean + sigma * rng.standard_normal(mean.shape)
