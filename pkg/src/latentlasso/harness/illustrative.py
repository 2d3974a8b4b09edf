"""Lasso against elastic net on two latent groups of near-duplicate predictors."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datagen import illustrative_dataset
from ..seeding import derive_seed
from ..solver import index_at_s, lasso_path
from .common import run_ordered
from .config import ExperimentConfig
from .io import write_csv

REPS_HEADER = ("method", "replicate", "s", "s_path", "lambda1", "pred_err", "est_err")
CURVE_HEADER = ("method", "s", "reps", "pred_err", "est_err")


@dataclass
class IllustrativeResult:
    files: dict[str, Path]
    curves: dict[str, dict[str, np.ndarray]]


def _methods(cfg: ExperimentConfig) -> tuple[tuple[str, float], ...]:
    return (("lasso", 0.0), ("enet", cfg.enet_lambda2))


def _replicate(cfg: ExperimentConfig, rep: int):
    train = illustrative_dataset(cfg.n, derive_seed(cfg.master_seed, "illustrative", "train", rep))
    point = illustrative_dataset(1, derive_seed(cfg.master_seed, "illustrative", "test", rep))
    big = None
    if cfg.test_points > 1:
        big = illustrative_dataset(cfg.test_points,
                                   derive_seed(cfg.master_seed, "illustrative", "test_set", rep))
    rows, big_rows = [], []
    for method, lambda2 in _methods(cfg):
        path = lasso_path(train.X, train.y, lambda2=lambda2, tol=cfg.tol, max_iter=cfg.max_iter,
                          n_lambda=cfg.n_lambda, min_ratio=cfg.min_ratio)
        for s in cfg.illustrative_s_grid:
            e = path.entries[index_at_s(path, s)]
            g = e.fit.gamma_hat
            d = train.gamma0 - g
            est = float(d @ d)
            pred = float(np.mean((point.y - point.X @ g) ** 2))
            rows.append((method, rep, s, e.s, e.lambda1, pred, est))
            if big is not None:
                big_rows.append((method, rep, s, e.s, e.lambda1,
                                 float(np.mean((big.y - big.X @ g) ** 2)), est))
    return rows, big_rows


def _mean_curves(cfg: ExperimentConfig, rows: list[tuple]) -> tuple[list[tuple], dict]:
    out, curves = [], {}
    for method, _ in _methods(cfg):
        sel = [r for r in rows if r[0] == method]
        pred = np.array([r[5] for r in sel]).reshape(-1, len(cfg.illustrative_s_grid))
        est = np.array([r[6] for r in sel]).reshape(-1, len(cfg.illustrative_s_grid))
        curves[method] = {"s": np.array(cfg.illustrative_s_grid), "pred_err": pred.mean(axis=0),
                          "est_err": est.mean(axis=0)}
        for j, s in enumerate(cfg.illustrative_s_grid):
            out.append((method, s, pred.shape[0], curves[method]["pred_err"][j],
                        curves[method]["est_err"][j]))
    return out, curves


def run_illustrative(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> IllustrativeResult:
    """Writes ``illustrative_reps.csv`` and the mean curves ``illustrative.csv``.

    Prediction error uses one fresh observation per replicate; with
    ``test_points > 1`` a larger held-out set is scored as well and written
    to ``illustrative_test<k>.csv``.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_ordered(lambda rep: _replicate(cfg, rep), range(cfg.reps), cfg.threads)
    rows = [r for res in results for r in res[0]]
    files = {"reps": out / "illustrative_reps.csv", "curves": out / "illustrative.csv"}
    write_csv(files["reps"], REPS_HEADER, rows)
    mean_rows, curves = _mean_curves(cfg, rows)
    write_csv(files["curves"], CURVE_HEADER, mean_rows)
    if cfg.test_points > 1:
        big_rows = [r for res in results for r in res[1]]
        big_mean, _ = _mean_curves(cfg, big_rows)
        files["curves_large_test"] = out / f"illustrative_test{cfg.test_points}.csv"
        write_csv(files["curves_large_test"], CURVE_HEADER, big_mean)
    return IllustrativeResult(files, curves)
