"""Repeated cross-validated Lasso fits, deleting each selected set before the next."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datagen import Dataset, sample_dataset
from ..metrics import auc, mse_in_sample, pe_out_sample
from ..model import LatentModelSpec
from ..seeding import derive_seed, stream
from ..solver import FitResult, cross_validate, default_lambda_grid, fit_grid
from .common import cell_model, prime, run_ordered
from .config import ExperimentConfig
from .io import is_binary, write_csv

SIM_REPS_HEADER = ("replicate", "step", "active_set_size", "lambda_cv", "mse", "pe",
                   "removed_total", "truncated")
SIM_HEADER = ("step", "reps", "active_set_size", "lambda_cv", "mse", "pe", "removed_total")
DATA_REPS_HEADER = ("split", "step", "active_set_size", "lambda_cv", "auc", "test_mse",
                    "removed_total", "truncated")
DATA_HEADER = ("step", "splits", "active_set_size", "lambda_cv", "auc", "test_mse", "removed_total")


@dataclass
class SequentialResult:
    files: dict[str, Path]
    table: list[dict]
    rows: list[tuple]


def cv_lasso(X, y, folds: int, seed: int, lambda2: float, cfg: ExperimentConfig) -> tuple[float, FitResult]:
    """Cross-validated penalty and the full-data fit there (warm-started down the grid)."""
    lambdas = default_lambda_grid(X, y, cfg.n_lambda, cfg.min_ratio)
    cv = cross_validate(X, y, folds=folds, lambdas=lambdas, lambda2=lambda2, seed=seed,
                        tol=cfg.tol, max_iter=cfg.max_iter)
    stop = int(np.flatnonzero(lambdas >= cv.lambda_opt)[-1])
    fit = fit_grid(X, y, lambdas[:stop + 1], lambda2, cfg.tol, cfg.max_iter)[-1]
    return cv.lambda_opt, fit


def removal_sequence(X, y, steps: int, folds: int, seed: int, lambda2: float, cfg: ExperimentConfig):
    """Yields ``(step, lambda_cv, padded coefficients, selected columns)``.

    Stops early when the selected set is empty or no columns remain; the
    caller learns about truncation from the number of steps produced.
    """
    p = X.shape[1]
    remaining = np.arange(p)
    used = np.zeros(p, dtype=bool)
    for step in range(1, steps + 1):
        if remaining.size == 0:
            return
        Xr = np.asfortranarray(X[:, remaining])
        lam, fit = cv_lasso(Xr, y, folds, seed, lambda2, cfg)
        chosen = remaining[fit.active_set]
        if np.any(used[chosen]):
            raise AssertionError("selected sets overlap across steps")
        used[chosen] = True
        g = np.zeros(p)
        g[remaining] = fit.gamma_hat
        yield step, lam, g, chosen
        if chosen.size == 0:
            return
        remaining = np.setdiff1d(remaining, chosen, assume_unique=True)


def _sim_replicate(cfg: ExperimentConfig, model: LatentModelSpec, gamma0, rep: int) -> list[tuple]:
    data = sample_dataset(model, cfg.n, derive_seed(cfg.master_seed, "sequential", "sample", rep), gamma0)
    fold_seed = derive_seed(cfg.master_seed, "sequential", "folds", rep)
    rows, removed = [], 0
    for step, lam, g, chosen in removal_sequence(data.X, data.y, cfg.steps, cfg.folds, fold_seed,
                                                 cfg.seq_lambda2, cfg):
        removed += chosen.size
        rows.append([rep, step, chosen.size, lam, mse_in_sample(g, gamma0, data.X),
                     pe_out_sample(g, gamma0, model), removed, False])
    if len(rows) < cfg.steps and rows:
        rows[-1][-1] = True
    return [tuple(r) for r in rows]


def _split(y, frac: float, rng: np.random.Generator, stratify: bool) -> tuple[np.ndarray, np.ndarray]:
    groups = [np.flatnonzero(y == c) for c in np.unique(y)] if stratify else [np.arange(y.size)]
    train = []
    for idx in groups:
        idx = rng.permutation(idx)
        train.append(idx[:int(round(frac * idx.size))])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(y.size), train, assume_unique=True)
    return train, test


def _data_split(cfg: ExperimentConfig, data: Dataset, binary: bool, split: int) -> list[tuple]:
    rng = stream(cfg.master_seed, "sequential", "split", split)
    train, test = _split(data.y, cfg.train_fraction, rng, stratify=binary)
    if test.size == 0 or train.size < cfg.folds:
        raise ValueError("split leaves too few rows for training or testing")
    # no intercept in the model: centre with training means only
    mx = data.X[train].mean(axis=0)
    my = data.y[train].mean()
    Xtr = np.asfortranarray(data.X[train] - mx)
    Xte = data.X[test] - mx
    fold_seed = derive_seed(cfg.master_seed, "sequential", "folds", split)
    rows, removed = [], 0
    for step, lam, g, chosen in removal_sequence(Xtr, data.y[train] - my, cfg.steps, cfg.folds,
                                                 fold_seed, cfg.seq_lambda2, cfg):
        removed += chosen.size
        score = Xte @ g + my
        a = float("nan")
        if binary and 0 < data.y[test].sum() < test.size:
            a = auc(score, data.y[test].astype(int))
        rows.append([split, step, chosen.size, lam, a, float(np.mean((data.y[test] - score) ** 2)),
                     removed, False])
    if len(rows) < cfg.steps and rows:
        rows[-1][-1] = True
    return [tuple(r) for r in rows]


def _table(rows: list[tuple], steps: int, cols: dict[str, int]) -> list[dict]:
    out = []
    for step in range(1, steps + 1):
        sel = [r for r in rows if r[1] == step]
        if not sel:
            break
        entry = {"step": step, "count": len(sel)}
        for name, j in cols.items():
            vals = np.array([r[j] for r in sel], dtype=float)
            entry[name] = float(np.nanmean(vals)) if np.any(np.isfinite(vals)) else float("nan")
        out.append(entry)
    return out


def run_sequential_removal(cfg: ExperimentConfig, data: Dataset | None = None,
                           out_dir: str | Path | None = None) -> SequentialResult:
    """Simulated source (``data`` is None) or an ingested dataset.

    The simulated case draws ``cfg.reps`` datasets from one fixed model and
    scores every step's coefficients, zero on removed columns, against the
    full ``gamma0``. The ingested case repeats the procedure on ``cfg.splits``
    random train/test splits and scores held-out predictions.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if data is None:
        _, model = cell_model(cfg, cfg.seq_psi_kind, cfg.seq_p, tag="sequential")
        gamma0 = prime(model)
        results = run_ordered(lambda rep: _sim_replicate(cfg, model, gamma0, rep),
                              range(cfg.reps), cfg.threads)
        rows = [r for res in results for r in res]
        table = _table(rows, cfg.steps, {"active_set_size": 2, "lambda_cv": 3, "mse": 4, "pe": 5,
                                         "removed_total": 6})
        files = {"reps": out / "sequential_reps.csv", "table": out / "sequential.csv"}
        write_csv(files["reps"], SIM_REPS_HEADER, rows)
        write_csv(files["table"], SIM_HEADER,
                  [(t["step"], t["count"], t["active_set_size"], t["lambda_cv"], t["mse"], t["pe"],
                    t["removed_total"]) for t in table])
    else:
        binary = is_binary(data.y)
        results = run_ordered(lambda k: _data_split(cfg, data, binary, k), range(cfg.splits), cfg.threads)
        rows = [r for res in results for r in res]
        table = _table(rows, cfg.steps, {"active_set_size": 2, "lambda_cv": 3, "auc": 4,
                                         "test_mse": 5, "removed_total": 6})
        files = {"reps": out / "sequential_data_reps.csv", "table": out / "sequential_data.csv"}
        write_csv(files["reps"], DATA_REPS_HEADER, rows)
        write_csv(files["table"], DATA_HEADER,
                  [(t["step"], t["count"], t["active_set_size"], t["lambda_cv"], t["auc"],
                    t["test_mse"], t["removed_total"]) for t in table])
    return SequentialResult(files, table, rows)
