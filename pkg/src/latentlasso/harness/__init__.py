"""Experiment runners, CSV I/O, plotting and the command line interface."""

from .bounds import bound_table, calibrate_C, coverage_run
from .config import ConfigError, ExperimentConfig, load_config
from .illustrative import run_illustrative
from .io import DataError, ingest_csv_dataset
from .plots import emit_plots
from .sequential import run_sequential_removal
from .simulation import run_main_simulation

__all__ = [
    "ConfigError", "DataError", "ExperimentConfig", "bound_table", "calibrate_C", "coverage_run",
    "emit_plots", "ingest_csv_dataset", "load_config", "run_illustrative", "run_main_simulation",
    "run_sequential_removal",
]
