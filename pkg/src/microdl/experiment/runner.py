"""Train -> encode -> cluster -> score pipeline over datasets, methods and repeats."""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..clustering import spectral_cluster
from ..disturbance import TrainingConfig
from ..exceptions import MicroDLError
from ..metrics import score_all
from ..numerics import rng_stream, stream_id
from ..stack import StackSpec, encode, train_stack
from ..stats import friedman_aligned_ranks, nemenyi_posthoc
from .data import generate_blobs, load_csv, reservoir_sample, standardize

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "jaccard", "fm", "rand")
RECORD_FIELDS = ("dataset", "algorithm", "kind", "alpha", "repeat", "seed",
                 "accuracy", "jaccard", "fm", "rand", "status", "error")
SUMMARY_FIELDS = ("dataset", "algorithm", "kind", "alpha", "n",
                  *(f"{m}_{s}" for m in METRICS for s in ("mean", "std")))


def load_dataset(spec, seed):
    if spec.source == "blobs":
        o = spec.options
        return generate_blobs(o["k"], o["per_cluster"], o["dim"], o["separation"], seed, spec.name)
    ds = load_csv(spec.options["path"], spec.options["label"], spec.name)
    if "sample_n" in spec.options:
        ds = ds.subset(reservoir_sample(len(ds.labels), spec.options["sample_n"],
                                        rng_stream(seed, 7)))
    return ds


def cell_seed(master, dataset_index, repeat):
    """Seed shared by all methods of one (dataset, repeat) cell, so Micro-DL
    and NMicro-DL differ only by the disturbance."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(dataset_index), int(repeat)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def features_for(method, X, y, cfg, alpha, seed):
    if method == "raw-features":
        return X
    tc = TrainingConfig(alpha if method == "micro-dl" else 0.0, cfg.learning_rate, cfg.epochs,
                        cfg.batch_size, cfg.mode, cfg.scaling, seed)
    spec = StackSpec(cfg.layers, None, tc, micro_enabled=method == "micro-dl")
    labels = y if method == "micro-dl" else None
    return encode(train_stack(X, labels, spec), X)


def run_cell(ds, method, cfg, alpha, seed):
    X = ds.features
    F = features_for(method, X, ds.labels, cfg, alpha, seed)
    pred = spectral_cluster(F, ds.class_count, seed, restarts=cfg.cluster_restarts)
    return score_all(ds.labels, pred)


@dataclass
class ResultsTable:
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    friedman: dict = None

    @classmethod
    def from_records(cls, records, friedman=False):
        table = cls(list(records))
        table.summary = summarize(table.records)
        if friedman:
            table.friedman = friedman_block(table.summary)
        return table

    def __eq__(self, other):
        return (isinstance(other, ResultsTable) and _norm(self.records) == _norm(other.records)
                and _norm(self.summary) == _norm(other.summary)
                and _norm(self.friedman) == _norm(other.friedman))


def _norm(obj):
    """NaN-safe structural form used for equality."""
    if isinstance(obj, float) and obj != obj:
        return "nan"
    if isinstance(obj, dict):
        return {k: _norm(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_norm(v) for v in obj]
    return obj


def summarize(records):
    groups = {}
    for rec in records:
        key = (rec["dataset"], rec["algorithm"], rec["kind"], rec["alpha"])
        groups.setdefault(key, [])
        if rec["status"] == "ok":
            groups[key].append(rec)
    out = []
    for (dataset, algorithm, kind, alpha), recs in groups.items():
        row = {"dataset": dataset, "algorithm": algorithm, "kind": kind, "alpha": alpha,
               "n": len(recs)}
        for m in METRICS:
            vals = np.array([r[m] for r in recs], dtype=np.float64)
            row[f"{m}_mean"] = float(vals.mean()) if len(vals) else float("nan")
            row[f"{m}_std"] = float(vals.std()) if len(vals) else float("nan")
        out.append(row)
    return out


def friedman_block(summary, metric="accuracy"):
    main = [r for r in summary if r["kind"] == "main"]
    datasets = list(dict.fromkeys(r["dataset"] for r in main))
    methods = list(dict.fromkeys(r["algorithm"] for r in main))
    if len(datasets) < 2 or len(methods) < 2:
        return None
    lookup = {(r["dataset"], r["algorithm"]): r[f"{metric}_mean"] for r in main}
    values = np.array([[lookup.get((d, m), np.nan) for m in methods] for d in datasets])
    if np.isnan(values).any():
        return None
    table = friedman_aligned_ranks(values)
    return {
        "metric": metric,
        "datasets": datasets,
        "algorithms": methods,
        "column_totals": [float(x) for x in table.column_totals],
        "average_ranks": [float(x) for x in table.average_ranks],
        "T": table.T,
        "p_value": table.p_value,
        "nemenyi": [[float(x) for x in row] for row in nemenyi_posthoc(table)],
    }


def _record(ds_name, method, kind, alpha, repeat, seed):
    rec = {"dataset": ds_name, "algorithm": method, "kind": kind,
           "alpha": alpha if method == "micro-dl" else None, "repeat": repeat, "seed": seed}
    rec.update({m: float("nan") for m in METRICS})
    rec.update(status="ok", error="")
    return rec


def _cells(cfg, sweep_only):
    for d_i, spec in enumerate(cfg.datasets):
        for r in range(cfg.repeats):
            if not sweep_only:
                for method in cfg.methods:
                    yield d_i, spec, method, "main", cfg.alpha, r
            for a in cfg.alpha_sweep:
                yield d_i, spec, "micro-dl", "sweep", a, r


def run_experiment(cfg, sweep_only=False):
    """Run every cell in a fixed order.  A failing cell becomes an error row."""
    cfg.validate()
    datasets = {}
    records = []
    for d_i, spec, method, kind, alpha, r in _cells(cfg, sweep_only):
        seed = cell_seed(cfg.seed, d_i, r)
        rec = _record(spec.name, method, kind, alpha, r, seed)
        try:
            if spec.name not in datasets:
                logger.info("dataset %s stream %s", spec.name, stream_id(cfg.seed, d_i))
                datasets[spec.name] = standardize(load_dataset(spec, cfg.seed))
            logger.info("cell %s/%s/%s alpha=%s repeat=%d seed=%d", spec.name, method, kind,
                        alpha, r, seed)
            rec.update(run_cell(datasets[spec.name], method, cfg, alpha, seed))
        except (MicroDLError, ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("cell %s/%s repeat %d failed: %s", spec.name, method, r, exc)
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}")
        records.append(rec)
    return ResultsTable.from_records(records, friedman=cfg.friedman and not sweep_only)
