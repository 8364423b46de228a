"""Greedy layer-wise deep stack: one Gaussian-visible layer followed by binary
layers, each trained with (or, for the NMicro-DL twin, without) the
micro-supervised disturbance.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .disturbance import TrainingConfig, select_representatives, train_micro
from .exceptions import ConfigError, DataError, DimensionError
from .numerics import rng_stream
from .rbm import BINARY, GAUSSIAN, hidden_given_visible, parse_params, dumps_params

logger = logging.getLogger(__name__)

STACK_MAGIC = "MICRODL-STACK"
STACK_VERSION = 1

# Stream key used for representative selection; layer trainers use (layer, ...).
SELECT_KEY = 10_000


@dataclass
class StackSpec:
    n_layers: int = 3
    hidden_dims: list = None
    configs: object = field(default_factory=TrainingConfig)
    micro_enabled: bool = True

    def layer_configs(self):
        if isinstance(self.configs, TrainingConfig):
            return [self.configs] * self.n_layers
        cfgs = list(self.configs)
        if len(cfgs) != self.n_layers:
            raise ConfigError(f"{len(cfgs)} layer configs for {self.n_layers} layers")
        return cfgs

    def dims(self, n_input):
        """Widths ``[input, h1, ..., hN]``, validated before any training."""
        if self.n_layers < 1:
            raise ConfigError("a stack needs at least one layer")
        hidden = self.hidden_dims
        if hidden is None:
            hidden = [n_input] * self.n_layers
        hidden = [int(h) for h in hidden]
        if len(hidden) != self.n_layers or min(hidden) < 1:
            raise ConfigError(f"hidden_dims {hidden} does not describe {self.n_layers} layers")
        return [int(n_input)] + hidden


@dataclass
class TrainedStack:
    layers: list
    logs: list = field(default_factory=list)
    pairs: object = None

    def __post_init__(self):
        for lower, upper in zip(self.layers, self.layers[1:]):
            if lower.n_hidden != upper.n_visible:
                raise DimensionError(
                    f"layer widths do not chain: {lower.n_hidden} -> {upper.n_visible}")

    @property
    def dims(self):
        return [self.layers[0].n_visible] + [p.n_hidden for p in self.layers]


def train_stack(data, labels, spec, pairs=None):
    """Train layer by layer; layer i+1 sees layer i's hidden probabilities.

    The same representative sample indices are used at every layer, so the
    disturbance keeps acting on the re-encoded representatives.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError("training data must be a non-empty 2-D matrix")
    dims = spec.dims(data.shape[1])
    cfgs = spec.layer_configs()
    for cfg in cfgs:
        cfg.validate()
        if spec.micro_enabled and not cfg.alpha > 0:
            raise ConfigError("micro-enabled stacks need alpha in (0, 1)")
    if pairs is None and labels is not None:
        pairs = select_representatives(labels, rng_stream(cfgs[0].seed, SELECT_KEY))
    if spec.micro_enabled and pairs is None:
        raise ConfigError("micro-enabled stacks need labels or representative pairs")

    layers, logs = [], []
    x = data
    for i, cfg in enumerate(cfgs):
        kind = GAUSSIAN if i == 0 else BINARY
        res = train_micro(x, None, cfg, kind, pairs=pairs, n_hidden=dims[i + 1],
                          stream_key=(i,), micro=spec.micro_enabled)
        layers.append(res.params)
        logs.append(res.log)
        logger.info("layer %d/%d trained (%s, micro=%s)", i + 1, len(cfgs), kind,
                    spec.micro_enabled)
        x = hidden_given_visible(res.params, x)
    return TrainedStack(layers, logs, pairs)


def encode(stack, data, upto=None):
    """Deterministic forward pass of hidden probabilities through the stack."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != stack.layers[0].n_visible:
        raise DimensionError(
            f"encode: expected {stack.layers[0].n_visible} columns, got shape {x.shape}")
    for params in stack.layers[:upto]:
        x = hidden_given_visible(params, x)
    return x


# Stack checkpoint: a manifest header followed by the layer blocks in order.
#
#   MICRODL-STACK 1
#   layers <N>
#   dims <n0> <n1> ... <nN>
#   <layer 1 block, see rbm.dumps_params>
#   ...


def dumps_stack(stack):
    head = [f"{STACK_MAGIC} {STACK_VERSION}", f"layers {len(stack.layers)}",
            "dims " + " ".join(str(d) for d in stack.dims)]
    return "\n".join(head) + "\n" + "".join(dumps_params(p) for p in stack.layers)


def loads_stack(text):
    lines = iter(text.splitlines())
    try:
        if next(lines).split() != [STACK_MAGIC, str(STACK_VERSION)]:
            raise DataError("stack checkpoint: bad header")
        key, count = next(lines).split()
        if key != "layers":
            raise DataError("stack checkpoint: missing layer count")
        dims = [int(d) for d in next(lines).split()[1:]]
    except (StopIteration, ValueError):
        raise DataError("stack checkpoint: malformed manifest") from None
    layers = [parse_params(lines) for _ in range(int(count))]
    stack = TrainedStack(layers)
    if stack.dims != dims:
        raise DataError(f"stack checkpoint: manifest dims {dims} != layer dims {stack.dims}")
    return stack


def save_stack(stack, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_stack(stack))


def load_stack(path):
    with open(path, encoding="utf-8") as fh:
        return loads_stack(fh.read())


class MicroDL(TransformerMixin, BaseEstimator):
    """Deep Micro-DL feature extractor; ``micro=False`` gives NMicro-DL.

    Examples
    --------
    >>> from microdl import MicroDL, SpectralClustering
    >>> from sklearn.pipeline import make_pipeline
    >>> pipe = make_pipeline(MicroDL(n_layers=3), SpectralClustering(n_clusters=3))
    """

    def __init__(self, n_layers=3, hidden_dims=None, alpha=0.3, learning_rate=0.01,
                 n_epochs=20, batch_size=64, micro=True, gradient_mode="derived",
                 spi_scaling="objective-consistent", random_state=0):
        self.n_layers = n_layers
        self.hidden_dims = hidden_dims
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.batch_size = batch_size
        self.micro = micro
        self.gradient_mode = gradient_mode
        self.spi_scaling = spi_scaling
        self.random_state = random_state

    def _spec(self):
        if self.micro and not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        cfg = TrainingConfig(self.alpha if self.micro else 0.0, self.learning_rate,
                             self.n_epochs, self.batch_size, self.gradient_mode,
                             self.spi_scaling, self.random_state)
        return StackSpec(self.n_layers, self.hidden_dims, cfg, self.micro)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if y is not None:
            y = np.asarray(y)
            if y.shape[0] != X.shape[0]:
                raise DimensionError("X and y have different lengths")
        self.stack_ = train_stack(X, y, self._spec())
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "stack_")
        return encode(self.stack_, check_array(X, dtype=np.float64))
