"""Fast-rate bound tables and an empirical coverage check."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..datagen import sample_dataset
from ..metrics import mse_in_sample
from ..model import LatentModelSpec
from ..seeding import derive_seed
from ..solver import lasso_fit
from ..theory import BoundInputs, empirical_spectrum, fast_rate_bound, fast_rate_lambda
from .common import cell_model, log, prime, run_ordered
from .config import ExperimentConfig
from .io import write_csv

BOUND_HEADER = ("psi_kind", "p", "lambda", "bound", "confidence", "partial_effective_rank",
                "c0", "l1_gamma0")


@dataclass
class CoverageRun:
    C: float
    mse: np.ndarray
    bound: np.ndarray

    @property
    def coverage(self) -> float:
        return float(np.mean(self.mse <= self.bound))


def _inputs(cfg: ExperimentConfig, C: float, c0: float, p: int, l1: float) -> BoundInputs:
    return BoundInputs(C=C, c0=c0, t=cfg.bound_t, sigma2=cfg.sigma2, m=cfg.m, p=p, n=cfg.n, l1_gamma0=l1)


def bound_table(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[Path, list[tuple]]:
    """Penalty, bound and confidence over the p grid (cells with p >= n only).

    Without an explicit ``bound_c0`` the constant is the partial effective
    rank averaged over ``bound_reps`` sampled designs.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for kind in cfg.psi_kinds:
        for p in cfg.cells_p:
            if p < cfg.n:
                log.info("bound needs p >= n; skipping %s p=%d", kind, p)
                continue
            _, model = cell_model(cfg, kind, p)
            gamma0 = prime(model)
            l1 = float(np.abs(gamma0).sum())
            pers = [empirical_spectrum(sample_dataset(
                        model, cfg.n, derive_seed(cfg.master_seed, "bound", "sample", kind, p, r)).X,
                        cfg.m).partial_effective_rank for r in range(cfg.bound_reps)]
            per = float(np.mean(pers))
            c0 = cfg.bound_c0 if cfg.bound_c0 is not None else per
            try:
                b = _inputs(cfg, cfg.bound_C, c0, p, l1)
            except ValueError as exc:
                log.warning("skipping %s p=%d: %s", kind, p, exc)
                continue
            bound, conf = fast_rate_bound(b)
            rows.append((kind, p, fast_rate_lambda(b), bound, conf, per, c0, l1))
    path = out / "bound.csv"
    write_csv(path, BOUND_HEADER, rows)
    return path, rows


def coverage_run(cfg: ExperimentConfig, model: LatentModelSpec, gamma0, C: float, reps: int,
                 key: str) -> CoverageRun:
    """Fits each replicate at the prescribed penalty and records MSE against the bound.

    ``c0`` is the partial effective rank of each realized design unless the
    config fixes it.
    """
    l1 = float(np.abs(gamma0).sum())

    def one(rep):
        data = sample_dataset(model, cfg.n, derive_seed(cfg.master_seed, "coverage", key, rep), gamma0)
        c0 = cfg.bound_c0
        if c0 is None:
            c0 = empirical_spectrum(data.X, cfg.m).partial_effective_rank
        b = _inputs(cfg, C, c0, model.p, l1)
        fit = lasso_fit(data.X, data.y, fast_rate_lambda(b), tol=cfg.tol, max_iter=cfg.max_iter)
        return mse_in_sample(fit.gamma_hat, gamma0, data.X), fast_rate_bound(b)[0]

    res = np.array(run_ordered(one, range(reps), cfg.threads))
    return CoverageRun(C, res[:, 0], res[:, 1])


def calibrate_C(cfg: ExperimentConfig, model: LatentModelSpec, gamma0, reps: int = 100,
                start: float = 1.0, ratio: float = 1.25, max_steps: int = 60) -> CoverageRun:
    """Smallest ``C`` on the grid ``start * ratio**k`` with full coverage on a pilot run."""
    C = start
    for _ in range(max_steps):
        run = coverage_run(cfg, model, gamma0, C, reps, "pilot")
        if run.coverage == 1.0:
            return run
        C *= ratio
    raise RuntimeError(f"no C up to {C:.3g} covers every pilot replicate")


def write_coverage(path: str | Path, run: CoverageRun) -> None:
    write_csv(path, ("replicate", "C", "mse", "bound", "covered"),
              [(i, run.C, m, b, bool(m <= b)) for i, (m, b) in enumerate(zip(run.mse, run.bound))])
