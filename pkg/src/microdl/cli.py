"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .clustering import spectral_cluster
from .disturbance import TrainingConfig
from .exceptions import ConfigError, DataError, MicroDLError
from .experiment.config import PRESETS, SCALING_ALIASES, ExperimentConfig, load_config
from .experiment.data import load_csv, reservoir_sample, standardize
from .experiment.export import export_results, read_results
from .experiment.plots import render_plots
from .experiment.runner import run_experiment
from .metrics import score_all
from .numerics import rng_stream
from .stack import StackSpec, encode, load_stack, save_stack, train_stack

logger = logging.getLogger("microdl")


def _alpha_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}")


def _common(p, training=True):
    p.add_argument("--config", help="flat key=value experiment config")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output file or directory")
    if training:
        p.add_argument("--alpha", type=float, help="scale coefficient in (0, 1)")
        p.add_argument("--mode", choices=("derived", "paper-literal"),
                       help="SPI gradient form")
        p.add_argument("--scaling", choices=("objective", "paper-literal"),
                       help="SPI update scaling")
        p.add_argument("--layers", type=int, help="stack depth")


def build_parser():
    parser = argparse.ArgumentParser(prog="microdl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a Micro-DL (or NMicro-DL) stack on a CSV")
    _common(p)
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--label-column", default="label")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--sample-n", type=int, help="seeded reservoir subsample of the rows")
    p.add_argument("--no-micro", action="store_true", help="train the NMicro-DL twin")
    p.add_argument("--log", help="write the per-epoch training log CSV here")

    p = sub.add_parser("encode", help="encode a CSV through a trained stack")
    _common(p, training=False)
    p.add_argument("--model", required=True, help="stack checkpoint from `train`")
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")

    p = sub.add_parser("cluster", help="spectral clustering of a feature CSV")
    _common(p, training=False)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--k", type=int, help="cluster count (default: number of label classes)")
    p.add_argument("--restarts", type=int, default=20)

    p = sub.add_parser("eval", help="score an assignment CSV against true labels")
    _common(p, training=False)
    p.add_argument("--truth", required=True, help="CSV holding the label column")
    p.add_argument("--pred", required=True, help="assignment CSV from `cluster`")
    p.add_argument("--label-column", default="label")
    p.add_argument("--algorithm", default="micro-dl")

    p = sub.add_parser("experiment", help="run the full comparison from a config file")
    _common(p)
    p.add_argument("--sample-n", type=int, help="subsample csv datasets lacking sample_n")

    p = sub.add_parser("sweep-alpha", help="alpha-sensitivity sweep from a config file")
    _common(p)
    p.add_argument("--alphas", type=_alpha_list, default=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                                          0.8, 0.9))
    p.add_argument("--sample-n", type=int)

    p = sub.add_parser("plot", help="render an SVG from a results file")
    p.add_argument("--results", required=True, help="results .csv or .json")
    p.add_argument("--kind", choices=("grouped-bars", "alpha-curve"), default="grouped-bars")
    p.add_argument("--out", required=True)
    return parser


def _experiment_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {"seed": args.seed, "alpha": args.alpha, "mode": args.mode, "layers": args.layers,
            "scaling": args.scaling}
    cfg = cfg.with_overrides(**over)
    if getattr(args, "sample_n", None):
        for spec in cfg.datasets:
            if spec.source == "csv":
                spec.options.setdefault("sample_n", args.sample_n)
    return cfg


def _write_features(path, features, labels=None, prefix="h"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{j}" for j in range(features.shape[1])]
                   + (["label"] if labels is not None else []))
        for i, row in enumerate(features):
            w.writerow([repr(float(x)) for x in row] + ([int(labels[i])] if labels is not None else []))


def _read_table(path, label_column):
    """Load a CSV; when it has no label column, labels are returned as None."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if label_column in [h.strip() for h in header]:
        ds = load_csv(path, label_column)
        return ds.features, ds.labels
    return _read_unlabeled(path), None


def _read_unlabeled(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    try:
        return np.array([[float(x) for x in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_train(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    preset = PRESETS[args.preset] if args.preset else {}
    layers = args.layers or preset.get("layers", cfg.layers)
    lr = args.learning_rate or preset.get("learning_rate", cfg.learning_rate)
    epochs = args.epochs if args.epochs is not None else preset.get("epochs", cfg.epochs)
    batch = args.batch_size or preset.get("batch_size", cfg.batch_size)
    seed = cfg.seed if args.seed is None else args.seed
    scaling = SCALING_ALIASES[args.scaling] if args.scaling else cfg.scaling
    micro = not args.no_micro
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    if micro and not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    tc = TrainingConfig(alpha if micro else 0.0, lr, epochs, batch, args.mode or cfg.mode,
                        scaling, seed).validate()

    ds = load_csv(args.data, args.label_column)
    if args.sample_n:
        ds = ds.subset(reservoir_sample(len(ds.labels), args.sample_n, rng_stream(seed, 7)))
    ds = standardize(ds)
    stack = train_stack(ds.features, ds.labels if micro else None,
                        StackSpec(layers, None, tc, micro_enabled=micro))
    out = args.out or "model.txt"
    save_stack(stack, out)
    if args.log:
        with open(args.log, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["layer", "epoch", "reconstruction_error", "spi_sfd_kl", "spi_dfd_kl",
                        "objective_proxy"])
            for layer, log in enumerate(stack.logs):
                for row in log:
                    w.writerow([layer, row["epoch"]] + [repr(float(row[k])) for k in
                               ("reconstruction_error", "spi_sfd_kl", "spi_dfd_kl",
                                "objective_proxy")])
    print(f"trained {layers}-layer {'Micro-DL' if micro else 'NMicro-DL'} stack "
          f"dims={stack.dims} -> {out}")


def cmd_encode(args):
    stack = load_stack(args.model)
    X, y = _read_table(args.data, args.label_column)
    # Training standardized its input, so the encoder sees the same scale.
    ds_std = standardize_matrix(X)
    F = encode(stack, ds_std)
    out = args.out or "features.csv"
    _write_features(out, F, y)
    print(f"encoded {F.shape[0]} rows to {F.shape[1]} features -> {out}")


def standardize_matrix(X):
    std = X.std(axis=0)
    if np.any(std == 0):
        raise DataError("encode: zero-variance feature column; it was dropped at training time "
                        "and the encoder input no longer matches")
    return (X - X.mean(axis=0)) / std


def cmd_cluster(args):
    X, y = _read_table(args.data, args.label_column)
    k = args.k or (int(np.unique(y).size) if y is not None else None)
    if not k:
        raise ConfigError("cluster: --k is required when the data has no label column")
    labels = spectral_cluster(X, k, args.seed or 0, restarts=args.restarts)
    out = args.out or "assignments.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "cluster"])
        w.writerows(enumerate(int(c) for c in labels))
    print(f"clustered {X.shape[0]} rows into {k} clusters -> {out}")


def cmd_eval(args):
    _, truth = _read_table(args.truth, args.label_column)
    if truth is None:
        raise ConfigError(f"eval: {args.truth} has no {args.label_column!r} column")
    with open(args.pred, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "cluster" not in rows[0]:
        raise DataError(f"{args.pred}: expected a 'cluster' column")
    pred = np.array([int(r["cluster"]) for r in rows])
    if pred.shape[0] != truth.shape[0]:
        raise DataError(f"eval: {pred.shape[0]} assignments for {truth.shape[0]} labels")
    record = {"dataset": os.path.basename(args.truth), "algorithm": args.algorithm,
              "seed": args.seed or 0, **score_all(truth, pred)}
    text = json.dumps(record, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def _write_outputs(table, out_dir, stem, plots):
    os.makedirs(out_dir, exist_ok=True)
    export_results(table, os.path.join(out_dir, f"{stem}.csv"), "csv")
    export_results(table, os.path.join(out_dir, f"{stem}.json"), "json")
    for kind in plots:
        render_plots(table, kind, os.path.join(out_dir, f"{kind}.svg"))


def _print_summary(table):
    for r in table.summary:
        alpha = "" if r["alpha"] is None else f" alpha={r['alpha']:g}"
        print(f"{r['dataset']:>12} {r['algorithm']:>13} {r['kind']:>5}{alpha}  "
              f"acc {r['accuracy_mean']:.4f} ± {r['accuracy_std']:.4f}  n={r['n']}")
    if table.friedman:
        print(f"Friedman aligned ranks: T={table.friedman['T']:.4f} "
              f"p={table.friedman['p_value']:.3g}")
    errors = [r for r in table.records if r["status"] != "ok"]
    if errors:
        print(f"{len(errors)} cell(s) failed; see the error column", file=sys.stderr)


def cmd_experiment(args):
    cfg = _experiment_config(args)
    if not cfg.datasets:
        raise ConfigError("experiment: the config defines no dataset.<name> entries")
    table = run_experiment(cfg)
    plots = ["grouped-bars"] + (["alpha-curve"] if cfg.alpha_sweep else [])
    _write_outputs(table, args.out or "results", "results", plots)
    _print_summary(table)


def cmd_sweep(args):
    cfg = _experiment_config(args).with_overrides(alpha_sweep=tuple(args.alphas))
    if not cfg.datasets:
        raise ConfigError("sweep-alpha: the config defines no dataset.<name> entries")
    table = run_experiment(cfg, sweep_only=True)
    _write_outputs(table, args.out or "sweep", "sweep", ["alpha-curve"])
    _print_summary(table)


def cmd_plot(args):
    render_plots(read_results(args.results), args.kind, args.out)
    print(f"wrote {args.kind} -> {args.out}")


COMMANDS = {"train": cmd_train, "encode": cmd_encode, "cluster": cmd_cluster, "eval": cmd_eval,
            "experiment": cmd_experiment, "sweep-alpha": cmd_sweep, "plot": cmd_plot}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except MicroDLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
