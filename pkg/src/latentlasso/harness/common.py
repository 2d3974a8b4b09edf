"""Pieces shared by the experiment runners."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from ..datagen import ModelConfig
from ..model import LatentModelSpec, oracle_gamma0
from ..seeding import derive_seed
from .config import ExperimentConfig

log = logging.getLogger("latentlasso")

T = TypeVar("T")
R = TypeVar("R")

# loadings are redrawn (under a new derived seed) when they come out rank deficient,
# which only happens for very small p where a row may have a single nonzero
MAX_LOADING_ATTEMPTS = 100


def run_ordered(fn: Callable[[T], R], tasks: Iterable[T], threads: int) -> list[R]:
    """Apply ``fn`` to every task; results come back in task order."""
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def cell_model(cfg: ExperimentConfig, psi_kind: str, p: int, psi_params: dict | None = None,
               tag: str = "cell") -> tuple[ModelConfig, LatentModelSpec]:
    """The fixed loadings and noise covariance of one ``(psi_kind, p)`` cell.

    Loadings depend on ``p`` only, so all noise structures at one ``p`` share
    the same ``A``.
    """
    params = cfg.psi_params_for(psi_kind) if psi_params is None else dict(psi_params)
    psi_seed = derive_seed(cfg.master_seed, tag, "psi", psi_kind, p)
    last = None
    for attempt in range(MAX_LOADING_ATTEMPTS):
        mc = ModelConfig(
            m=cfg.m, p=p, beta=tuple(cfg.beta),
            loading_seed=derive_seed(cfg.master_seed, tag, "loadings", p, attempt),
            loading_density=cfg.loading_density, sigma2=cfg.sigma2,
            psi_kind=psi_kind, psi_seed=psi_seed, psi_params=params,
        )
        try:
            return mc, mc.build()
        except ValueError as exc:
            if "rank deficient" not in str(exc):
                raise
            last = exc
    raise ValueError(f"no full-rank loadings after {MAX_LOADING_ATTEMPTS} draws at p={p}") from last


def prime(model: LatentModelSpec) -> np.ndarray:
    """Builds every lazily cached factor of ``model`` so it can be shared across threads."""
    gamma0 = oracle_gamma0(model)
    model.sigma_quad(gamma0)
    model.psi.sqrt_apply(np.zeros((model.p, 1)))
    return gamma0
