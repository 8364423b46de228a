"""Experiment orchestration: ingestion, the comparison runner, export and plots."""

from .config import DatasetSpec, ExperimentConfig, PRESETS, load_config, parse_config
from .data import Dataset, generate_blobs, load_csv, reservoir_sample, standardize
from .export import export_results, read_results
from .plots import render_plots
from .runner import ResultsTable, run_experiment
