"""Command line entry point.

Exit status is 0 on success, 1 for configuration errors and 2 when a run
fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bounds import bound_table
from .config import ConfigError, load_config
from .illustrative import run_illustrative
from .io import DataError, ingest_csv_dataset, is_binary
from .plots import emit_plots
from .sequential import run_sequential_removal
from .simulation import run_main_simulation

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="YAML file with experiment settings")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--reps", type=int, help="number of replicates")
    sp.add_argument("--threads", type=int, help="worker threads")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--no-plots", action="store_true", help="skip SVG rendering")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="latentlasso", description="Lasso prediction under a latent factor model")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("illustrative", help="Lasso vs elastic net on two latent groups")
    _common(sp)
    sp.add_argument("--enet-lambda2", type=float)
    sp.add_argument("--test-points", type=int, help="size of an extra held-out set per replicate")

    sp = sub.add_parser("simulate", help="main grid over noise structures and p")
    _common(sp)
    sp.add_argument("--p", type=int, nargs="+", dest="p_grid", help="override the p grid")
    sp.add_argument("--psi", nargs="+", dest="psi_kinds", help="noise structures to run")
    sp.add_argument("--include-interpolation-point", action="store_true", default=None,
                    help="also run p = n")
    sp.add_argument("--dump-psi", action="store_true", default=None,
                    help="save each realized noise covariance as .npy")
    sp.add_argument("--debug-paths", action="store_true", default=None,
                    help="write (lambda, s, active, objective) per path")
    sp.add_argument("--timings", action="store_true", default=None, dest="record_timings",
                    help="also write per-replicate wall-clock times")

    sp = sub.add_parser("sequential", help="sequential removal of selected predictors")
    _common(sp)
    sp.add_argument("--data", dest="data_path", help="CSV to use instead of simulated data")
    sp.add_argument("--response", dest="response_column")
    sp.add_argument("--standardize", action="store_true", default=None)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--splits", type=int)
    sp.add_argument("--enet-lambda2", type=float, dest="seq_lambda2",
                    help="add a ridge term to every fit")

    sp = sub.add_parser("bound", help="fast-rate bound over the p grid")
    _common(sp)
    sp.add_argument("--p", type=int, nargs="+", dest="p_grid")
    sp.add_argument("--psi", nargs="+", dest="psi_kinds")
    sp.add_argument("--C", type=float, dest="bound_C")
    sp.add_argument("--t", type=float, dest="bound_t")
    sp.add_argument("--c0", type=float, dest="bound_c0")

    sp = sub.add_parser("ingest-check", help="validate a CSV dataset")
    sp.add_argument("path")
    sp.add_argument("--response", required=True)
    sp.add_argument("--standardize", action="store_true")

    sp = sub.add_parser("plot", help="render SVG charts from a harness CSV")
    sp.add_argument("csv")
    sp.add_argument("--kind", help="schema name; detected from the header by default")
    sp.add_argument("--out", help="directory for the SVG files")
    return ap


_OVERRIDES = ("seed", "reps", "threads", "out", "enet_lambda2", "test_points", "p_grid",
              "psi_kinds", "include_interpolation_point", "dump_psi", "debug_paths", "record_timings", "data_path",
              "response_column", "standardize", "steps", "folds", "splits", "seq_lambda2",
              "bound_C", "bound_t", "bound_c0")
_RENAME = {"seed": "master_seed", "out": "output_dir"}


def _config(args):
    overrides = {}
    for name in _OVERRIDES:
        if hasattr(args, name):
            overrides[_RENAME.get(name, name)] = getattr(args, name)
    overrides["scenario"] = args.command
    return load_config(args.config, **overrides)


def _plot(paths, enabled: bool) -> None:
    if not enabled:
        return
    for p in paths:
        for svg in emit_plots(p):
            print(f"wrote {svg}")


def _run(args) -> int:
    if args.command == "ingest-check":
        data = ingest_csv_dataset(args.path, args.response, args.standardize)
        kind = "binary" if is_binary(data.y) else "continuous"
        print(f"ok: n={data.n} p={data.p} response={args.response} ({kind})")
        return EXIT_OK
    if args.command == "plot":
        for svg in emit_plots(args.csv, args.kind, args.out):
            print(f"wrote {svg}")
        return EXIT_OK

    cfg = _config(args)
    plots = not args.no_plots
    if args.command == "illustrative":
        res = run_illustrative(cfg)
        files = list(res.files.values())
        _plot([res.files["curves"]], plots)
    elif args.command == "simulate":
        res = run_main_simulation(cfg)
        files = list(res.files.values())
        _plot([res.files["curves"], res.files["summary"]], plots)
    elif args.command == "sequential":
        data = None
        if cfg.data_path is not None:
            if cfg.response_column is None:
                raise ConfigError("--response is required with --data")
            data = ingest_csv_dataset(cfg.data_path, cfg.response_column, cfg.standardize)
        res = run_sequential_removal(cfg, data)
        files = list(res.files.values())
        _plot([res.files["table"]], plots)
    else:
        path, _ = bound_table(cfg)
        files = [path]
        _plot([path], plots)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help end here; hand back the code instead of exiting
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError, RuntimeError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
