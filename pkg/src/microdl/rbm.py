"""Binary RBM and Gaussian-visible RBM with CD-1 statistics.

Both visible kinds share one parameter container.  Hidden units are always
binary.  The gaussian-linear kind uses a fixed unit variance and expects
standardized inputs.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DataError, DimensionError, KindError, NumericError, ParameterError
from .numerics import bernoulli_sample, gaussian_sample, rng_stream, sigmoid

BINARY = "binary"
GAUSSIAN = "gaussian-linear"
VISIBLE_KINDS = (BINARY, GAUSSIAN)

CHECKPOINT_MAGIC = "MICRODL-RBM"
CHECKPOINT_VERSION = 1


@dataclass
class RbmParams:
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    visible_kind: str = BINARY
    gaussian_sigma: float = 1.0

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        if self.visible_kind not in VISIBLE_KINDS:
            raise KindError(f"unknown visible kind {self.visible_kind!r}")
        if self.W.ndim != 2:
            raise DimensionError("W must be a 2-D matrix")
        n, m = self.W.shape
        if self.b.shape != (m,) or self.c.shape != (n,):
            raise DimensionError(
                f"inconsistent dims: W {self.W.shape}, b {self.b.shape}, c {self.c.shape}"
            )

    @property
    def n_visible(self):
        return self.W.shape[0]

    @property
    def n_hidden(self):
        return self.W.shape[1]

    def copy(self):
        return RbmParams(
            self.W.copy(), self.b.copy(), self.c.copy(), self.visible_kind, self.gaussian_sigma
        )

    def replace(self, W=None, b=None, c=None):
        return RbmParams(
            self.W if W is None else W,
            self.b if b is None else b,
            self.c if c is None else c,
            self.visible_kind,
            self.gaussian_sigma,
        )

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))
        )


@dataclass
class Cd1Stats:
    """Batch averages ``<.>_0`` (data) and ``<.>_1`` (one-step reconstruction)."""

    vh_data: np.ndarray
    vh_recon: np.ndarray
    h_data: np.ndarray
    h_recon: np.ndarray
    v_data: np.ndarray
    v_recon: np.ndarray
    recon: np.ndarray = field(default=None, repr=False)


def init_params(n_visible, n_hidden, visible_kind=BINARY, rng=None, scale=0.01):
    """Weights ~ N(0, scale^2), biases zero."""
    if rng is None:
        rng = rng_stream(0)
    W = scale * rng.standard_normal((n_visible, n_hidden))
    return RbmParams(W, np.zeros(n_hidden), np.zeros(n_visible), visible_kind)


def _as_batch(x, width, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise DimensionError(f"{what}: expected {width} columns, got shape {x.shape}")
    return x


def hidden_given_visible(params, v):
    """p(h_j = 1 | v) for every row of ``v``; same formula for both kinds."""
    v = _as_batch(v, params.n_visible, "hidden_given_visible")
    return sigmoid(v @ params.W + params.b)


def visible_given_hidden_binary(params, h):
    if params.visible_kind != BINARY:
        raise KindError("visible_given_hidden_binary called on a gaussian-linear model")
    h = _as_batch(h, params.n_hidden, "visible_given_hidden_binary")
    return sigmoid(h @ params.W.T + params.c)


def visible_given_hidden_gaussian(params, h, rng=None, sample=False):
    """Mean ``h W^T + c``; with ``sample`` adds N(0, sigma^2) noise."""
    if params.visible_kind != GAUSSIAN:
        raise KindError("visible_given_hidden_gaussian called on a binary model")
    h = _as_batch(h, params.n_hidden, "visible_given_hidden_gaussian")
    mean = h @ params.W.T + params.c
    if not sample:
        return mean
    if rng is None:
        raise ParameterError("sampling the gaussian visible layer needs an rng")
    return gaussian_sample(mean, params.gaussian_sigma, rng)


def visible_mean(params, h):
    if params.visible_kind == BINARY:
        return visible_given_hidden_binary(params, h)
    return visible_given_hidden_gaussian(params, h)


def cd1_step(params, v0, rng):
    """One Gibbs step.  Hidden states are sampled to drive the reconstruction,
    while the statistics use probabilities (visible mean for the gaussian kind).
    """
    v0 = _as_batch(v0, params.n_visible, "cd1_step")
    if v0.shape[0] == 0:
        raise DataError("cd1_step: empty batch")
    h0 = hidden_given_visible(params, v0)
    h0_state = bernoulli_sample(h0, rng)
    v1 = visible_mean(params, h0_state)
    h1 = hidden_given_visible(params, v1)
    size = v0.shape[0]
    return Cd1Stats(
        vh_data=v0.T @ h0 / size,
        vh_recon=v1.T @ h1 / size,
        h_data=h0.mean(axis=0),
        h_recon=h1.mean(axis=0),
        v_data=v0.mean(axis=0),
        v_recon=v1.mean(axis=0),
        recon=v1,
    )


def _check_stats(stats):
    for name in ("vh_data", "vh_recon", "h_data", "h_recon", "v_data", "v_recon"):
        if not np.all(np.isfinite(getattr(stats, name))):
            raise NumericError(f"non-finite CD statistic {name}")


def cd1_update(params, stats, eps):
    if not eps > 0:
        raise ParameterError(f"learning rate must be > 0, got {eps}")
    _check_stats(stats)
    return params.replace(
        W=params.W + eps * (stats.vh_data - stats.vh_recon),
        b=params.b + eps * (stats.h_data - stats.h_recon),
        c=params.c + eps * (stats.v_data - stats.v_recon),
    )


def reconstruction_error(params, v):
    """Mean squared error of the deterministic (mean-field) reconstruction."""
    v = _as_batch(v, params.n_visible, "reconstruction_error")
    recon = visible_mean(params, hidden_given_visible(params, v))
    return float(np.mean((v - recon) ** 2))


def iter_minibatches(n_samples, batch_size, rng):
    order = rng.permutation(n_samples)
    for start in range(0, n_samples, batch_size):
        yield order[start:start + batch_size]


def train_rbm(data, params, eps, epochs, batch_size, rng):
    """Plain CD-1 training.  Returns ``(params, errors)`` where ``errors[0]``
    is the reconstruction error before training and ``errors[e]`` after epoch e."""
    data = _as_batch(data, params.n_visible, "train_rbm")
    errors = [reconstruction_error(params, data)]
    for _ in range(epochs):
        for idx in iter_minibatches(data.shape[0], batch_size, rng):
            params = cd1_update(params, cd1_step(params, data[idx], rng), eps)
        if not params.is_finite():
            raise NumericError("RBM parameters became non-finite")
        errors.append(reconstruction_error(params, data))
    return params, errors


# -- checkpoints ---------------------------------------------------------------
#
# Text layout, one token group per line, floats written with repr() so they
# round-trip exactly:
#
#   MICRODL-RBM 1
#   visible_kind <binary|gaussian-linear>
#   n_visible <n>
#   n_hidden <m>
#   gaussian_sigma <float>
#   W
#   <n lines, m space-separated floats each>
#   b
#   <1 line, m floats>
#   c
#   <1 line, n floats>


def _floats(values):
    return " ".join(repr(float(x)) for x in values)


def dumps_params(params):
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"visible_kind {params.visible_kind}",
        f"n_visible {params.n_visible}",
        f"n_hidden {params.n_hidden}",
        f"gaussian_sigma {params.gaussian_sigma!r}",
        "W",
    ]
    lines.extend(_floats(row) for row in params.W)
    lines += ["b", _floats(params.b), "c", _floats(params.c)]
    return "\n".join(lines) + "\n"


def _parse_row(line, width, what):
    vals = line.split()
    if len(vals) != width:
        raise DataError(f"checkpoint: {what} row has {len(vals)} values, expected {width}")
    return [float(x) for x in vals]


def parse_params(lines):
    """Parse one RBM block from an iterator of lines (consumes exactly the block)."""
    lines = iter(lines)

    def expect(key):
        parts = next(lines).split()
        if not parts or parts[0] != key:
            raise DataError(f"checkpoint: expected {key!r}, got {' '.join(parts)!r}")
        return parts[1:]

    try:
        magic = next(lines).split()
        if magic != [CHECKPOINT_MAGIC, str(CHECKPOINT_VERSION)]:
            raise DataError(f"checkpoint: bad header {' '.join(magic)!r}")
        kind = expect("visible_kind")[0]
        n = int(expect("n_visible")[0])
        m = int(expect("n_hidden")[0])
        sigma = float(expect("gaussian_sigma")[0])
        expect("W")
        W = [_parse_row(next(lines), m, "W") for _ in range(n)]
        expect("b")
        b = _parse_row(next(lines), m, "b")
        expect("c")
        c = _parse_row(next(lines), n, "c")
    except StopIteration:
        raise DataError("checkpoint: truncated file") from None
    return RbmParams(np.array(W).reshape(n, m), np.array(b), np.array(c), kind, sigma)


def loads_params(text):
    return parse_params(text.splitlines())


def save_params(params, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_params(params))


def load_params(path):
    with open(path, encoding="utf-8") as fh:
        return loads_params(fh.read())


class RBM(TransformerMixin, BaseEstimator):
    """CD-1 trained RBM usable as a scikit-learn transformer.

    ``visible="gaussian"`` gives the Gaussian-visible variant for standardized
    real-valued inputs.  ``n_components=None`` keeps the hidden width equal to
    the input width.
    """

    def __init__(self, n_components=None, visible="binary", learning_rate=0.01,
                 n_epochs=20, batch_size=64, random_state=0):
        self.n_components = n_components
        self.visible = visible
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        kind = _visible_kind(self.visible)
        m = self.n_components or X.shape[1]
        params = init_params(X.shape[1], m, kind, rng_stream(self.random_state, 0))
        self.params_, self.reconstruction_errors_ = train_rbm(
            X, params, self.learning_rate, self.n_epochs, self.batch_size,
            rng_stream(self.random_state, 1),
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return hidden_given_visible(self.params_, X)


def _visible_kind(name):
    aliases = {"binary": BINARY, "bernoulli": BINARY, "gaussian": GAUSSIAN, GAUSSIAN: GAUSSIAN}
    try:
        return aliases[name]
    except KeyError:
        raise ParameterError(f"visible must be 'binary' or 'gaussian', got {name!r}") from None
