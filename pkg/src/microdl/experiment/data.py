"""Dataset ingestion, preprocessing and synthetic data."""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigError, DataError, ParameterError
from ..numerics import rng_stream

MISSING = {"", "?", "na", "nan", "null", "none"}


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    feature_names: list = field(default_factory=list)
    label_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError(f"{self.name}: features {self.features.shape} vs labels {self.labels.shape}")
        if not np.all(np.isfinite(self.features)):
            raise DataError(f"{self.name}: non-finite feature values")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(self.features.shape[1])]

    @property
    def class_count(self):
        return int(np.unique(self.labels).size)

    def subset(self, rows):
        return Dataset(self.name, self.features[rows], self.labels[rows],
                       list(self.feature_names), list(self.label_names))


def _first_appearance_codes(values):
    codes, out = {}, []
    for v in values:
        out.append(codes.setdefault(v, len(codes)))
    return out, list(codes)


def load_csv(path, label_column="label", name=None):
    """Read a headed CSV.  Numeric columns become features as-is, any other
    column is ordinal-encoded in order of first appearance; the label column
    is densely re-indexed the same way."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise ConfigError(f"{path}: label column {label_column!r} not found in header {header}")
    body = rows[1:]
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            if cell.strip().lower() in MISSING:
                raise DataError(f"{path}: row {r}, column {header[c]!r}: missing or unparseable value")
    columns = list(zip(*body)) if body else [() for _ in header]
    features, names = [], []
    labels, label_names = [], []
    for c, col in enumerate(columns):
        cells = [x.strip() for x in col]
        if header[c] == label_column:
            labels, label_names = _first_appearance_codes(cells)
            continue
        try:
            features.append([float(x) for x in cells])
        except ValueError:
            features.append(_first_appearance_codes(cells)[0])
        names.append(header[c])
    X = np.array(features, dtype=np.float64).T.reshape(len(body), len(names))
    return Dataset(name or str(path), X, np.array(labels, dtype=np.int64), names, label_names)


def standardize(ds):
    """Zero mean, unit population std per feature; constant features dropped."""
    X = ds.features
    std = X.std(axis=0)
    keep = std > 0
    if not keep.all():
        dropped = [n for n, k in zip(ds.feature_names, keep) if not k]
        warnings.warn(f"{ds.name}: dropping zero-variance features {dropped}", stacklevel=2)
    X = X[:, keep]
    Z = (X - X.mean(axis=0)) / std[keep]
    names = [n for n, k in zip(ds.feature_names, keep) if k]
    return Dataset(ds.name, Z, ds.labels, names, list(ds.label_names))


def generate_blobs(k, per_cluster, dim, separation, seed, name=None):
    """``k`` spherical unit-variance Gaussian clusters, centres pairwise at
    least ``separation`` apart.  Rows are grouped by class."""
    if k < 2:
        raise ParameterError("generate_blobs needs k >= 2")
    if per_cluster < 1 or dim < 1 or separation < 0:
        raise ParameterError("per_cluster and dim must be positive, separation non-negative")
    rng = rng_stream(seed)
    if dim >= k:
        # Scaled simplex corners (pairwise distance exactly `separation`), randomly rotated.
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        centers = (separation / np.sqrt(2.0)) * np.eye(k, dim) @ Q.T
    else:
        centers = _spread_centers(k, dim, separation, rng)
    X = np.vstack([centers[j] + rng.standard_normal((per_cluster, dim)) for j in range(k)])
    y = np.repeat(np.arange(k), per_cluster)
    return Dataset(name or f"blobs{k}", X, y)


def _spread_centers(k, dim, separation, rng):
    side = max(separation, 1e-9) * k
    while True:
        for _ in range(1000):
            c = rng.uniform(0, side, size=(k, dim))
            d = np.linalg.norm(c[:, None] - c[None], axis=2)[np.triu_indices(k, 1)]
            if d.min() >= separation:
                return c
        side *= 2


def reservoir_sample(n_rows, n_keep, rng):
    """Indices of a uniform size-``n_keep`` sample (Algorithm R), sorted."""
    if n_keep >= n_rows:
        return np.arange(n_rows)
    keep = list(range(n_keep))
    for i in range(n_keep, n_rows):
        j = int(rng.integers(0, i + 1))
        if j < n_keep:
            keep[j] = i
    return np.sort(np.array(keep))
