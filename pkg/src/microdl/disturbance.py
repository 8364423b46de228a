"""Micro-supervised disturbance: CD-1 learning nudged by KL terms over a few
labeled representative pairs.

Two representatives are drawn per class.  Same-class pairs (SFD) have their
hidden-probability KL minimized, cross-class pairs (DFD) have it maximized.
Only the representatives' labels are ever used.

Gradient modes
--------------
``derived``
    exact derivative of ``sum_x h_f log(h_f / h_g)``; passes finite
    difference checks.
``paper-literal``
    the closed form as originally printed: ``+ln h_g`` inside the bracket and
    ``v_g h_g (1 - h_g)`` as the subtracted term.

Scaling
-------
``objective-consistent``
    gradient descent on ``(1-a) CD + a (SFD - DFD)``; SPI terms carry the
    learning rate and are subtracted.
``paper-literal``
    SPI terms added with weight ``a`` and no learning rate, SFD positive, DFD
    negative.
"""

import logging
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConfigError, DataError, DimensionError, NumericError
from .numerics import clamp_prob, kl_divergence, rng_stream, stream_id
from .rbm import (
    BINARY, GAUSSIAN, _visible_kind, cd1_step, hidden_given_visible, init_params,
    iter_minibatches, reconstruction_error,
)

logger = logging.getLogger(__name__)

GRADIENT_MODES = ("derived", "paper-literal")
SPI_SCALINGS = ("objective-consistent", "paper-literal")
UNLABELED = -1

LOG_COLUMNS = ("epoch", "reconstruction_error", "spi_sfd_kl", "spi_dfd_kl", "objective_proxy")


@dataclass
class DisturbancePairs:
    sfd: list
    dfd: list
    class_of: dict

    def __post_init__(self):
        self.sfd = [(int(f), int(g)) for f, g in self.sfd]
        self.dfd = [(int(r), int(s)) for r, s in self.dfd]
        self.class_of = {int(k): v for k, v in self.class_of.items()}
        for f, g in self.sfd:
            if self.class_of.get(f) != self.class_of.get(g):
                raise DataError(f"SFD pair ({f}, {g}) spans two classes")
        for r, s in self.dfd:
            if self.class_of.get(r) == self.class_of.get(s):
                raise DataError(f"DFD pair ({r}, {s}) lies within one class")

    @property
    def k_s(self):
        return len(self.sfd)

    @property
    def k_d(self):
        return len(self.dfd)

    @property
    def indices(self):
        return sorted(self.class_of)

    def check_indices(self, n_samples):
        bad = [i for i in self.class_of if not 0 <= i < n_samples]
        if bad:
            raise DataError(f"representative indices out of range: {bad}")


@dataclass
class TrainingConfig:
    alpha: float = 0.3
    eps: float = 0.01
    epochs: int = 20
    batch_size: int = 64
    gradient_mode: str = "derived"
    spi_scaling: str = "objective-consistent"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        # alpha == 0 is the ablation value; user-facing entry points require (0, 1).
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.eps > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.eps}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ConfigError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.spi_scaling not in SPI_SCALINGS:
            raise ConfigError(f"spi_scaling must be one of {SPI_SCALINGS}")
        return self

    def replace(self, **changes):
        return TrainingConfig(**{**asdict(self), **changes})


def select_representatives(labels, rng):
    """Draw two distinct samples of every labeled class (negative = unlabeled)."""
    members = {}
    for i in range(len(labels)):
        lab = labels[i]
        if lab is None or (not isinstance(lab, str) and lab < 0):
            continue
        members.setdefault(lab, []).append(i)
    if not members:
        raise DataError("no labeled samples to draw representatives from")
    sfd, class_of = [], {}
    for cls in sorted(members):
        idx = members[cls]
        if len(idx) < 2:
            raise DataError(f"class {cls!r} has fewer than 2 labeled samples")
        f, g = rng.choice(len(idx), size=2, replace=False)
        f, g = idx[f], idx[g]
        sfd.append((f, g))
        class_of[f] = class_of[g] = cls
    return build_dfd(DisturbancePairs(sfd, [], class_of))


def build_dfd(pairs):
    """One pair per unordered class pair, from each class's first representative,
    classes taken in sorted order."""
    firsts = sorted((pairs.class_of[f], f) for f, _ in pairs.sfd)
    if len(firsts) < 2:
        warnings.warn("only one class among representatives; DFD set is empty", stacklevel=2)
    dfd = [(firsts[a][1], firsts[b][1])
           for a in range(len(firsts)) for b in range(a + 1, len(firsts))]
    return DisturbancePairs(pairs.sfd, dfd, pairs.class_of)


def _pair_rows(data, pair_list):
    f = np.array([p[0] for p in pair_list], dtype=np.intp)
    g = np.array([p[1] for p in pair_list], dtype=np.intp)
    return data[f], data[g]


def _mean_pair_kl(params, data, pair_list):
    if not pair_list:
        return 0.0
    vf, vg = _pair_rows(data, pair_list)
    hf = hidden_given_visible(params, vf)
    hg = hidden_given_visible(params, vg)
    return float(np.mean([kl_divergence(p, q) for p, q in zip(hf, hg)]))


def spi_kl_parts(params, data, pairs):
    """Mean SFD KL and mean DFD KL; an empty set contributes 0."""
    data = np.asarray(data, dtype=np.float64)
    return _mean_pair_kl(params, data, pairs.sfd), _mean_pair_kl(params, data, pairs.dfd)


def spi_kl_term(params, data, pairs):
    sfd, dfd = spi_kl_parts(params, data, pairs)
    return sfd - dfd


def _grad_coefficients(params, vf, vg, mode):
    hf = clamp_prob(hidden_given_visible(params, vf))
    hg = clamp_prob(hidden_given_visible(params, vg))
    if mode == "derived":
        coef_f = hf * (1.0 - hf) * (np.log(hf) - np.log(hg) + 1.0)
        coef_g = hf * (1.0 - hg)
    elif mode == "paper-literal":
        coef_f = hf * (1.0 - hf) * (np.log(hf) + np.log(hg) + 1.0)
        coef_g = hg * (1.0 - hg)
    else:
        raise ConfigError(f"gradient mode must be one of {GRADIENT_MODES}, got {mode!r}")
    return coef_f, coef_g


def _summed_grads(params, data, pair_list, mode):
    vf, vg = _pair_rows(data, pair_list)
    coef_f, coef_g = _grad_coefficients(params, vf, vg, mode)
    return vf.T @ coef_f - vg.T @ coef_g, (coef_f - coef_g).sum(axis=0)


def _pair_vectors(params, v_f, v_g):
    v_f = np.asarray(v_f, dtype=np.float64).reshape(1, -1)
    v_g = np.asarray(v_g, dtype=np.float64).reshape(1, -1)
    if v_f.shape[1] != params.n_visible or v_g.shape[1] != params.n_visible:
        raise DimensionError("pair vectors must match the visible width")
    return v_f, v_g


def spi_grad_w(params, v_f, v_g, mode="derived"):
    """Gradient of KL(h_f || h_g) with respect to W, shape (n, m)."""
    v_f, v_g = _pair_vectors(params, v_f, v_g)
    coef_f, coef_g = _grad_coefficients(params, v_f, v_g, mode)
    return v_f.T @ coef_f - v_g.T @ coef_g


def spi_grad_b(params, v_f, v_g, mode="derived"):
    v_f, v_g = _pair_vectors(params, v_f, v_g)
    coef_f, coef_g = _grad_coefficients(params, v_f, v_g, mode)
    return (coef_f - coef_g)[0]


def spi_grad_c(params, v_f=None, v_g=None, mode="derived"):
    # The hidden probabilities do not depend on the visible bias.
    return np.zeros(params.n_visible)


def spi_gradients(params, data, pairs, mode="derived"):
    """``(1/K_S) sum_SFD G - (1/K_D) sum_DFD G`` for W and b."""
    data = np.asarray(data, dtype=np.float64)
    gw_s, gb_s = _summed_grads(params, data, pairs.sfd, mode)
    gw_d, gb_d = _summed_grads(params, data, pairs.dfd, mode)
    return gw_s / pairs.k_s - gw_d / pairs.k_d, gb_s / pairs.k_s - gb_d / pairs.k_d


def micro_update(params, stats, data, pairs, cfg):
    a, eps = cfg.alpha, cfg.eps
    W = params.W + (1 - a) * eps * (stats.vh_data - stats.vh_recon)
    b = params.b + (1 - a) * eps * (stats.h_data - stats.h_recon)
    c = params.c + (1 - a) * eps * (stats.v_data - stats.v_recon)
    if a > 0:
        if pairs is None or pairs.k_s == 0 or pairs.k_d == 0:
            raise ConfigError("alpha > 0 needs non-empty SFD and DFD sets")
        gw, gb = spi_gradients(params, data, pairs, cfg.gradient_mode)
        if cfg.spi_scaling == "objective-consistent":
            W = W - a * eps * gw
            b = b - a * eps * gb
        else:
            W = W + a * gw
            b = b + a * gb
    for name, value in (("W", W), ("b", b), ("c", c)):
        if not np.all(np.isfinite(value)):
            raise NumericError(f"micro_update produced non-finite values in {name}")
    return params.replace(W=W, b=b, c=c)


def _log_row(epoch, params, data, pairs, alpha):
    err = reconstruction_error(params, data)
    if pairs is None:
        sfd = dfd = float("nan")
    else:
        sfd, dfd = spi_kl_parts(params, data, pairs)
    return {
        "epoch": epoch,
        "reconstruction_error": err,
        "spi_sfd_kl": sfd,
        "spi_dfd_kl": dfd,
        "objective_proxy": (1 - alpha) * err + alpha * (sfd - dfd),
    }


@dataclass
class TrainingResult:
    params: object
    log: list = field(default_factory=list)
    pairs: DisturbancePairs = None


def train_micro(data, labels, cfg, visible_kind=BINARY, pairs=None, n_hidden=None,
                stream_key=(), micro=True):
    """Micro-DRBM / Micro-DGRBM learning.

    Streams derived from ``(cfg.seed, *stream_key)``: 0 initialization,
    1 representative selection, 2 CD sampling and mini-batch order.  With
    ``micro=False`` the SPI never touches the update (plain CD-1), but pairs,
    when known, are still monitored in the log.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError("training data must be a non-empty 2-D matrix")
    if visible_kind == BINARY and not np.all((data >= 0) & (data <= 1)):
        raise DataError("binary-visible training needs data in [0, 1]")
    n_hidden = n_hidden or data.shape[1]
    if pairs is None and labels is not None:
        pairs = select_representatives(labels, rng_stream(cfg.seed, *stream_key, 1))
    if pairs is not None:
        pairs.check_indices(data.shape[0])
    alpha = cfg.alpha if micro else 0.0
    if alpha > 0 and (pairs is None or pairs.k_s == 0 or pairs.k_d == 0):
        raise ConfigError("alpha > 0 needs representatives from at least two classes")
    step_cfg = cfg.replace(alpha=alpha)
    logger.debug("train_micro streams init=%s select=%s cd=%s",
                 stream_id(cfg.seed, *stream_key, 0), stream_id(cfg.seed, *stream_key, 1),
                 stream_id(cfg.seed, *stream_key, 2))

    params = init_params(data.shape[1], n_hidden, visible_kind, rng_stream(cfg.seed, *stream_key, 0))
    rng = rng_stream(cfg.seed, *stream_key, 2)
    log = [_log_row(0, params, data, pairs, alpha)]
    for epoch in range(1, cfg.epochs + 1):
        for idx in iter_minibatches(data.shape[0], cfg.batch_size, rng):
            stats = cd1_step(params, data[idx], rng)
            params = micro_update(params, stats, data, pairs, step_cfg)
        log.append(_log_row(epoch, params, data, pairs, alpha))
    return TrainingResult(params, log, pairs)


def train_micro_drbm(data, labels, cfg, pairs=None, **kw):
    return train_micro(data, labels, cfg, BINARY, pairs=pairs, **kw)


def train_micro_dgrbm(data, labels, cfg, pairs=None, **kw):
    return train_micro(data, labels, cfg, GAUSSIAN, pairs=pairs, **kw)


class MicroRBM(TransformerMixin, BaseEstimator):
    """Single Micro-DRBM (``visible="binary"``) or Micro-DGRBM (``"gaussian"``).

    ``fit(X, y)`` reads two labeled samples per class from ``y``; entries equal
    to -1 are treated as unlabeled, so ``y`` may carry only those 2K labels.
    """

    def __init__(self, n_components=None, visible="gaussian", alpha=0.3, learning_rate=0.01,
                 n_epochs=20, batch_size=64, gradient_mode="derived",
                 spi_scaling="objective-consistent", random_state=0):
        self.n_components = n_components
        self.visible = visible
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.gradient_mode = gradient_mode
        self.spi_scaling = spi_scaling
        self.random_state = random_state

    def _config(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        return TrainingConfig(self.alpha, self.learning_rate, self.n_epochs, self.batch_size,
                              self.gradient_mode, self.spi_scaling, self.random_state)

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise DimensionError("X and y have different lengths")
        res = train_micro(X, y, self._config(), _visible_kind(self.visible),
                          n_hidden=self.n_components)
        self.params_ = res.params
        self.pairs_ = res.pairs
        self.training_log_ = res.log
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return hidden_given_visible(self.params_, check_array(X, dtype=np.float64))
