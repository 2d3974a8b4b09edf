"""Prediction and estimation error functionals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .model import LatentModelSpec
from .solver import PathResult


@dataclass(frozen=True)
class ErrorReport:
    mse: float
    pe: float
    mse_rel: float
    pe_rel: float
    est_err_l2: float
    est_err_std: float
    s: float
    lambda1: float
    n_active: int = 0


def _diff(gamma_hat, gamma0):
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    gamma0 = np.asarray(gamma0, dtype=float)
    if gamma_hat.shape != gamma0.shape or gamma_hat.ndim != 1:
        raise ValueError(f"dimension mismatch: {gamma_hat.shape} vs {gamma0.shape}")
    return gamma0 - gamma_hat


def mse_in_sample(gamma_hat, gamma0, X) -> float:
    """``(1/n) |X (gamma0 - gamma_hat)|^2``."""
    d = _diff(gamma_hat, gamma0)
    if X.shape[1] != d.size:
        raise ValueError(f"X has {X.shape[1]} columns, coefficients have {d.size}")
    fit = X @ d
    return float(fit @ fit / X.shape[0])


def pe_out_sample(gamma_hat, gamma0, model: LatentModelSpec) -> float:
    """``d^T (A^T A + Psi) d`` with ``d = gamma0 - gamma_hat``."""
    d = _diff(gamma_hat, gamma0)
    if d.size != model.p:
        raise ValueError(f"model has p={model.p}, coefficients have {d.size}")
    return model.sigma_quad(d)


def estimation_errors(gamma_hat, gamma0, standardized: bool = True) -> tuple[float, float]:
    """Squared l2 error and (optionally) its ratio to ``|gamma0|^2``."""
    d = _diff(gamma_hat, gamma0)
    l2 = float(d @ d)
    if not standardized:
        return l2, float("nan")
    ref = float(np.asarray(gamma0, dtype=float) @ gamma0)
    if ref == 0:
        raise ValueError("standardized estimation error undefined for gamma0 = 0")
    return l2, l2 / ref


class Scorer:
    """Evaluates fits against a fixed truth; caches the gamma = 0 denominators."""

    def __init__(self, gamma0, X, model: LatentModelSpec | None = None):
        self.gamma0 = np.asarray(gamma0, dtype=float)
        self.X = X
        self.model = model
        zero = np.zeros_like(self.gamma0)
        self.mse0 = mse_in_sample(zero, self.gamma0, X)
        self.pe0 = pe_out_sample(zero, self.gamma0, model) if model is not None else float("nan")
        self.norm0 = float(self.gamma0 @ self.gamma0)

    def mse_rel(self, gamma_hat) -> float:
        return mse_in_sample(gamma_hat, self.gamma0, self.X) / self.mse0

    def report(self, gamma_hat, s: float, lambda1: float) -> ErrorReport:
        mse = mse_in_sample(gamma_hat, self.gamma0, self.X)
        pe = pe_out_sample(gamma_hat, self.gamma0, self.model) if self.model is not None else float("nan")
        l2, _ = estimation_errors(gamma_hat, self.gamma0, standardized=False)
        return ErrorReport(
            mse=mse, pe=pe,
            mse_rel=mse / self.mse0, pe_rel=pe / self.pe0,
            est_err_l2=l2, est_err_std=l2 / self.norm0 if self.norm0 > 0 else float("nan"),
            s=float(s), lambda1=float(lambda1),
            n_active=int(np.count_nonzero(gamma_hat)),
        )


def optimal_s(path: PathResult, gamma0, X, model: LatentModelSpec | None = None,
              scorer: Scorer | None = None) -> tuple[float, ErrorReport]:
    """Path entry with the smallest relative in-sample MSE; ties go to the smaller s."""
    if len(path) == 0:
        raise ValueError("empty path")
    scorer = scorer or Scorer(gamma0, X, model)
    rel = np.array([scorer.mse_rel(e.fit.gamma_hat) for e in path.entries])
    s = path.s_values
    cand = np.flatnonzero(rel <= rel.min())
    best = int(cand[np.argmin(s[cand])])
    e = path.entries[best]
    return e.s, scorer.report(e.fit.gamma_hat, e.s, e.lambda1)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d of equal length")
    uniq = np.unique(labels)
    if not np.all(np.isin(uniq, [0, 1])):
        raise ValueError("labels must be binary 0/1")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = scipy.stats.rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
