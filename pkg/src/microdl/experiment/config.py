"""Flat ``key = value`` experiment configuration.

Recognised keys (``#`` starts a comment)::

    seed             master seed (int)
    repeats          repeats per (dataset, method) cell (int >= 1)
    methods          comma list from micro-dl, nmicro-dl, raw-features
    preset           desk | image | tabular  (fills layers/learning_rate/epochs)
    layers           stack depth
    alpha            scale coefficient in (0, 1)
    learning_rate    CD learning rate
    epochs           epochs per layer
    batch_size       mini-batch size
    mode             derived | paper-literal           (SPI gradient form)
    scaling          objective | paper-literal         (SPI update scaling)
    alpha_sweep      comma list of alphas in (0, 1); empty disables the sweep
    friedman         true | false  (aligned-ranks test across methods)
    cluster_restarts k-means restarts inside spectral clustering
    dataset.<name>   blobs k=3 per_cluster=100 dim=10 separation=3.0
                     csv path=data.csv label=class sample_n=5904

Relative csv paths resolve against the config file's directory.
"""

import os
from dataclasses import dataclass, field, replace

from ..exceptions import ConfigError

METHODS = ("micro-dl", "nmicro-dl", "raw-features")

PRESETS = {
    # Desk-scale synthetic runs.
    "desk": {"layers": 3, "learning_rate": 0.05, "epochs": 30, "batch_size": 64},
    # Image-feature protocol: one Gaussian layer plus sixteen binary layers.
    "image": {"layers": 17, "learning_rate": 1e-4, "epochs": 30, "batch_size": 64},
    # Tabular protocol: six layers, learning rate 1e-8.
    "tabular": {"layers": 6, "learning_rate": 1e-8, "epochs": 30, "batch_size": 64},
}

SCALING_ALIASES = {"objective": "objective-consistent", "objective-consistent": "objective-consistent",
                   "paper-literal": "paper-literal"}


@dataclass
class DatasetSpec:
    name: str
    source: str
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    datasets: list = field(default_factory=list)
    seed: int = 0
    repeats: int = 3
    methods: tuple = METHODS
    preset: str = "desk"
    layers: int = 3
    alpha: float = 0.3
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 64
    mode: str = "derived"
    scaling: str = "objective-consistent"
    alpha_sweep: tuple = ()
    friedman: bool = True
    cluster_restarts: int = 20

    def validate(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        for a in (self.alpha, *self.alpha_sweep):
            if not 0 < a < 1:
                raise ConfigError(f"alpha values must lie in (0, 1), got {a}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.mode not in ("derived", "paper-literal"):
            raise ConfigError(f"mode must be derived or paper-literal, got {self.mode!r}")
        if self.scaling not in ("objective-consistent", "paper-literal"):
            raise ConfigError(f"scaling must be objective or paper-literal, got {self.scaling!r}")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("learning_rate > 0, epochs >= 0 and batch_size >= 1 required")
        if self.cluster_restarts < 1:
            raise ConfigError("cluster_restarts must be >= 1")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate dataset names")
        return self

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "scaling" in kw:
            kw["scaling"] = _scaling(kw["scaling"])
        return replace(self, **kw).validate()


def _scaling(value):
    try:
        return SCALING_ALIASES[value]
    except KeyError:
        raise ConfigError(f"scaling must be objective or paper-literal, got {value!r}") from None


def _bool(value):
    v = value.lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _floats(value):
    return tuple(float(x) for x in value.split(",") if x.strip())


def _dataset(name, value, base_dir):
    parts = value.split()
    if not parts or parts[0] not in ("blobs", "csv"):
        raise ConfigError(f"dataset.{name}: source must be 'blobs' or 'csv'")
    opts = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ConfigError(f"dataset.{name}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        opts[k] = v
    if parts[0] == "blobs":
        allowed = {"k": int, "per_cluster": int, "dim": int, "separation": float}
        unknown = set(opts) - set(allowed)
        if unknown:
            raise ConfigError(f"dataset.{name}: unknown blobs options {sorted(unknown)}")
        try:
            opts = {k: allowed[k](v) for k, v in opts.items()}
        except ValueError as exc:
            raise ConfigError(f"dataset.{name}: {exc}") from None
        opts = {"k": 3, "per_cluster": 100, "dim": 10, "separation": 3.0, **opts}
    else:
        if "path" not in opts:
            raise ConfigError(f"dataset.{name}: csv source needs path=")
        if base_dir and not os.path.isabs(opts["path"]):
            opts["path"] = os.path.join(base_dir, opts["path"])
        opts.setdefault("label", "label")
        if "sample_n" in opts:
            opts["sample_n"] = int(opts["sample_n"])
    return DatasetSpec(name, parts[0], opts)


_CONVERTERS = {
    "seed": int, "repeats": int, "layers": int, "learning_rate": float, "epochs": int,
    "batch_size": int, "alpha": float, "mode": str, "scaling": _scaling,
    "alpha_sweep": _floats, "friedman": _bool, "cluster_restarts": int,
    "methods": lambda v: tuple(m.strip() for m in v.split(",") if m.strip()),
}


def parse_config(text, base_dir=None):
    raw, datasets = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("dataset."):
            datasets.append(_dataset(key[len("dataset."):], value, base_dir))
        elif key == "preset" or key in _CONVERTERS:
            raw[key] = value
        else:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
    preset = raw.pop("preset", "desk")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[preset])
    for key, value in raw.items():
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    return ExperimentConfig(datasets=datasets, preset=preset, **values).validate()


def load_config(path):
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        return parse_config(fh.read(), os.path.dirname(os.path.abspath(path)))
