"""Main Monte-Carlo grid: Lasso paths over (noise structure, p, replicate)."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..covariance import DENSE_LIMIT
from ..datagen import sample_dataset
from ..metrics import Scorer, optimal_s
from ..model import LatentModelSpec
from ..seeding import derive_seed
from ..solver import index_at_s, kkt_check, lasso_path, write_path_csv
from ..theory import empirical_spectrum
from .common import cell_model, log, prime, run_ordered
from .config import ExperimentConfig
from .io import write_csv

CURVES_HEADER = ("scenario", "psi_kind", "p", "replicate", "s", "s_path", "lambda1",
                 "mse_rel", "pe_rel", "est_err_std", "n_active")
OPTIMAL_HEADER = ("psi_kind", "p", "replicate", "s_opt", "lambda1", "mse", "pe", "mse_rel",
                  "pe_rel", "est_err_std", "n_active", "partial_effective_rank")
SUMMARY_HEADER = ("psi_kind", "p", "reps", "mse_rel_opt", "pe_rel_opt", "s_opt",
                  "mse_rel_s05", "est_err_std_s05", "partial_effective_rank", "l1_gamma0")
DIAGNOSTICS_HEADER = ("psi_kind", "p", "replicate", "n_fits", "n_converged", "n_kkt_pass",
                      "max_active", "support_ok", "extended")
TIMINGS_HEADER = ("psi_kind", "p", "replicate", "runtime_ms")
SKIPPED_HEADER = ("psi_kind", "p", "replicate", "error")


@dataclass(frozen=True)
class _Cell:
    psi_kind: str
    p: int
    model: LatentModelSpec
    gamma0: np.ndarray


@dataclass
class ReplicateResult:
    curves: list[tuple]
    optimal: tuple
    diagnostics: tuple
    runtime_ms: float
    mse_rel_half: float
    est_err_half: float


@dataclass
class SimulationResult:
    out_dir: Path
    files: dict[str, Path]
    summary: list[dict]
    diagnostics: list[dict]
    skipped: list[tuple]


def _replicate(cfg: ExperimentConfig, cell: _Cell, rep: int, path_dir: Path | None) -> ReplicateResult:
    seed = derive_seed(cfg.master_seed, "simulate", "sample", cell.psi_kind, cell.p, rep)
    data = sample_dataset(cell.model, cfg.n, seed, cell.gamma0)
    t0 = time.perf_counter()
    path = lasso_path(data.X, data.y, tol=cfg.tol, max_iter=cfg.max_iter,
                      n_lambda=cfg.n_lambda, min_ratio=cfg.min_ratio)
    runtime = (time.perf_counter() - t0) * 1e3
    scorer = Scorer(cell.gamma0, data.X, cell.model)

    curves = []
    for s in cfg.s_grid:
        e = path.entries[index_at_s(path, s)]
        r = scorer.report(e.fit.gamma_hat, e.s, e.lambda1)
        curves.append(("simulate", cell.psi_kind, cell.p, rep, s, e.s, e.lambda1,
                       r.mse_rel, r.pe_rel, r.est_err_std, r.n_active))
    half = path.entries[index_at_s(path, 0.5)]
    half_report = scorer.report(half.fit.gamma_hat, half.s, half.lambda1)

    s_opt, best = optimal_s(path, cell.gamma0, data.X, scorer=scorer)
    per = empirical_spectrum(data.X, cfg.m).partial_effective_rank if cfg.m < cfg.n else float("nan")
    optimal = (cell.psi_kind, cell.p, rep, s_opt, best.lambda1, best.mse, best.pe,
               best.mse_rel, best.pe_rel, best.est_err_std, best.n_active, per)

    converged = kkt_pass = 0
    support_ok = True
    for e in path.entries:
        fit = e.fit
        if fit.converged:
            converged += 1
            if kkt_check(data.X, data.y, fit.gamma_hat, fit.lambda1, fit.lambda2) <= 10 * cfg.tol:
                kkt_pass += 1
        if cell.p > cfg.n and fit.lambda2 == 0 and fit.n_active > cfg.n:
            support_ok = False
    diagnostics = (cell.psi_kind, cell.p, rep, len(path), converged, kkt_pass,
                   max(e.fit.n_active for e in path.entries), support_ok, path.extended)

    if path_dir is not None:
        write_path_csv(path, data.X, data.y, path_dir / f"{cell.psi_kind}_p{cell.p}_r{rep}.csv")
    return ReplicateResult(curves, optimal, diagnostics, runtime,
                           half_report.mse_rel, half_report.est_err_std)


def _build_cells(cfg: ExperimentConfig, skipped: list, psi_dir: Path | None) -> list[_Cell]:
    cells = []
    for kind in cfg.psi_kinds:
        for p in cfg.cells_p:
            try:
                _, model = cell_model(cfg, kind, p)
                gamma0 = prime(model)
            except (ValueError, MemoryError, np.linalg.LinAlgError) as exc:
                log.warning("skipping cell %s p=%d: %s", kind, p, exc)
                skipped.append((kind, p, -1, str(exc)))
                continue
            if psi_dir is not None:
                if p <= DENSE_LIMIT:
                    np.save(psi_dir / f"{kind}_p{p}.npy", model.psi.to_dense())
                else:
                    log.warning("not dumping psi for %s p=%d: larger than %d", kind, p, DENSE_LIMIT)
            cells.append(_Cell(kind, p, model, gamma0))
    return cells


def run_main_simulation(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> SimulationResult:
    """Runs every (psi_kind, p) cell for ``cfg.reps`` replicates and writes

    ``curves.csv`` (one row per replicate and s-grid point), ``optimal.csv``,
    ``summary.csv``, ``diagnostics.csv`` (convergence and KKT counts),
    ``skipped.csv``, all deterministic functions of the config. Wall-clock
    times per replicate go to ``timings.csv`` only when ``record_timings`` is set.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path_dir = psi_dir = None
    if cfg.debug_paths:
        path_dir = out / "paths"
        path_dir.mkdir(exist_ok=True)
    if cfg.dump_psi:
        psi_dir = out / "psi"
        psi_dir.mkdir(exist_ok=True)

    skipped: list[tuple] = []
    cells = _build_cells(cfg, skipped, psi_dir)
    tasks = [(cell, rep) for cell in cells for rep in range(cfg.reps)]

    def work(task):
        cell, rep = task
        try:
            return _replicate(cfg, cell, rep, path_dir)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            return exc

    results = run_ordered(work, tasks, cfg.threads)

    curves, optimal, diags, timings = [], [], [], []
    per_cell: dict[tuple[str, int], list[ReplicateResult]] = defaultdict(list)
    for (cell, rep), res in zip(tasks, results):
        if isinstance(res, Exception):
            log.warning("skipping %s p=%d replicate %d: %s", cell.psi_kind, cell.p, rep, res)
            skipped.append((cell.psi_kind, cell.p, rep, str(res)))
            continue
        curves.extend(res.curves)
        optimal.append(res.optimal)
        diags.append(res.diagnostics)
        timings.append((cell.psi_kind, cell.p, rep, round(res.runtime_ms, 3)))
        per_cell[(cell.psi_kind, cell.p)].append(res)

    summary = []
    for cell in cells:
        reps = per_cell.get((cell.psi_kind, cell.p))
        if not reps:
            continue
        opt = np.array([r.optimal[3:] for r in reps], dtype=float)
        summary.append({
            "psi_kind": cell.psi_kind, "p": cell.p, "reps": len(reps),
            "mse_rel_opt": float(opt[:, 4].mean()),
            "pe_rel_opt": float(opt[:, 5].mean()),
            "s_opt": float(opt[:, 0].mean()),
            "mse_rel_s05": float(np.mean([r.mse_rel_half for r in reps])),
            "est_err_std_s05": float(np.mean([r.est_err_half for r in reps])),
            "partial_effective_rank": float(opt[:, 8].mean()),
            "l1_gamma0": float(np.abs(cell.gamma0).sum()),
        })

    files = {
        "curves": out / "curves.csv",
        "optimal": out / "optimal.csv",
        "summary": out / "summary.csv",
        "diagnostics": out / "diagnostics.csv",
        "skipped": out / "skipped.csv",
    }
    if cfg.record_timings:
        files["timings"] = out / "timings.csv"
    write_csv(files["curves"], CURVES_HEADER, curves)
    write_csv(files["optimal"], OPTIMAL_HEADER, optimal)
    write_csv(files["summary"], SUMMARY_HEADER, [tuple(row[h] for h in SUMMARY_HEADER) for row in summary])
    write_csv(files["diagnostics"], DIAGNOSTICS_HEADER, diags)
    write_csv(files["skipped"], SKIPPED_HEADER, skipped)
    if cfg.record_timings:
        write_csv(files["timings"], TIMINGS_HEADER, timings)
    return SimulationResult(
        out_dir=out, files=files, summary=summary,
        diagnostics=[dict(zip(DIAGNOSTICS_HEADER, d)) for d in diags], skipped=skipped,
    )
