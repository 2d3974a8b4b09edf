"""Lasso and elastic-net fitting by coordinate descent.

Objective, with ``n`` rows in ``X``::

    (1/n) ||y - X g||_2^2 + lambda1 ||g||_1 + lambda2 ||g||_2^2

Under this normalisation the smallest penalty giving the null model is
``lambda_max = (2/n) ||X^T y||_inf`` and the KKT conditions read
``|(2/n) X_j^T r - 2 lambda2 g_j| <= lambda1``, with equality and matching
sign on the active set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._cd import cd_solve

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
DEFAULT_N_LAMBDA = 100
DEFAULT_MIN_RATIO = 1e-3
EXTENDED_MIN_RATIO = 1e-4


@dataclass(frozen=True)
class PenaltySpec:
    lambda1: float
    lambda2: float = 0.0

    def __post_init__(self):
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise ValueError("penalties must be nonnegative")


@dataclass(frozen=True, eq=False)
class FitResult:
    gamma_hat: np.ndarray
    active_set: np.ndarray
    lambda1: float
    lambda2: float
    iterations: int
    converged: bool
    kkt_violation: float
    descent_ok: bool = True

    @property
    def n_active(self) -> int:
        return int(self.active_set.size)


@dataclass(frozen=True)
class PathEntry:
    lambda1: float
    fit: FitResult
    s: float


@dataclass(frozen=True, eq=False)
class PathResult:
    entries: list[PathEntry]
    gamma_n: np.ndarray
    lambda2: float = 0.0
    extended: bool = False

    def __len__(self):
        return len(self.entries)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lambda1 for e in self.entries])

    @property
    def s_values(self) -> np.ndarray:
        return np.array([e.s for e in self.entries])


class CVResult(NamedTuple):
    lambda_opt: float
    cv_curve: list[tuple[float, float, float]]


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes X{X.shape} y{y.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("need at least one row and one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in X or y")
    return np.asfortranarray(X), y


def objective(X, y, gamma, lambda1, lambda2=0.0) -> float:
    r = y - X @ gamma
    return float(r @ r / X.shape[0] + lambda1 * np.abs(gamma).sum() + lambda2 * gamma @ gamma)


def kkt_check(X, y, gamma, lambda1, lambda2=0.0) -> float:
    """Largest KKT residual, recomputed from scratch."""
    n = X.shape[0]
    grad = 2.0 / n * (X.T @ (y - X @ gamma)) - 2.0 * lambda2 * gamma
    viol = np.where(
        gamma > 0, np.abs(grad - lambda1),
        np.where(gamma < 0, np.abs(grad + lambda1), np.abs(grad) - lambda1),
    )
    return float(max(viol.max(), 0.0))


def lambda_max(X, y) -> float:
    return float(2.0 / X.shape[0] * np.abs(X.T @ y).max())


def default_lambda_grid(X, y, n_lambda: int = DEFAULT_N_LAMBDA,
                        min_ratio: float = DEFAULT_MIN_RATIO) -> np.ndarray:
    lmax = lambda_max(X, y)
    if lmax == 0:
        raise ValueError("X^T y is identically zero; no nontrivial path")
    return np.geomspace(lmax, min_ratio * lmax, n_lambda)


def _fit_inplace(X, y, l1, l2, gamma, r, col_sq, tol, max_iter, debug, lmax):
    if l1 >= lmax * (1.0 - 1e-12):
        # zero is optimal (to rounding) here; skip CD so no 1e-17 entries survive
        gamma[:] = 0.0
        sweeps, converged, kkt, descent_ok = 0, True, kkt_check(X, y, gamma, l1, l2), True
    else:
        sweeps, converged, kkt, descent_ok = cd_solve(X, r, gamma, col_sq, float(l1), float(l2),
                                                      float(tol), int(max_iter), bool(debug))
    # drop accumulated rounding in the running residual
    r[:] = y - X @ gamma
    return FitResult(
        gamma_hat=gamma.copy(),
        active_set=np.flatnonzero(gamma),
        lambda1=float(l1),
        lambda2=float(l2),
        iterations=int(sweeps),
        converged=bool(converged),
        kkt_violation=float(kkt),
        descent_ok=bool(descent_ok),
    )


def lasso_fit(X, y, penalty: PenaltySpec | float, init=None, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER, debug: bool = False) -> FitResult:
    """Single coordinate-descent fit; ``penalty`` may be a bare lambda1."""
    if not isinstance(penalty, PenaltySpec):
        penalty = PenaltySpec(float(penalty))
    if not tol > 0:
        raise ValueError("tol must be positive")
    X, y = _check_xy(X, y)
    p = X.shape[1]
    gamma = np.zeros(p) if init is None else np.array(init, dtype=float)
    if gamma.shape != (p,):
        raise ValueError("init has the wrong length")
    r = y - X @ gamma
    col_sq = (X * X).sum(axis=0) / X.shape[0]
    return _fit_inplace(X, y, penalty.lambda1, penalty.lambda2, gamma, r, col_sq, tol, max_iter, debug,
                        lambda_max(X, y))


def _ridge_endpoint(X, y, lambda2):
    """Least-squares (or ridge) solution at lambda1 = 0, minimum norm if rank deficient."""
    n, p = X.shape
    if lambda2 > 0:
        Xa = np.vstack([X / np.sqrt(n), np.sqrt(lambda2) * np.eye(p)])
        ya = np.concatenate([y / np.sqrt(n), np.zeros(p)])
        return np.linalg.lstsq(Xa, ya, rcond=None)[0]
    return np.linalg.lstsq(X, y, rcond=None)[0]


def fit_grid(X, y, lambdas, lambda2=0.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
             debug=False, init=None) -> list[FitResult]:
    """Warm-started fits along a strictly decreasing grid."""
    X, y = _check_xy(X, y)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("empty lambda grid")
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda grid must be strictly decreasing")
    if np.any(lambdas < 0):
        raise ValueError("lambda values must be nonnegative")
    gamma = np.zeros(X.shape[1]) if init is None else np.array(init, dtype=float)
    r = y - X @ gamma
    col_sq = (X * X).sum(axis=0) / X.shape[0]
    lmax = lambda_max(X, y)
    return [_fit_inplace(X, y, lam, lambda2, gamma, r, col_sq, tol, max_iter, debug, lmax)
            for lam in lambdas]


def _plateaued(fits: Sequence[FitResult], n: int, p: int) -> bool:
    sizes = [f.n_active for f in fits]
    if abs(sizes[-1] - min(n - 1, p)) <= 1:
        return True
    return len(sizes) >= 5 and len(set(sizes[-5:])) == 1


def lasso_path(X, y, lambdas=None, lambda2: float = 0.0, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER, n_lambda: int = DEFAULT_N_LAMBDA,
               min_ratio: float = DEFAULT_MIN_RATIO, extend: bool = True,
               debug: bool = False) -> PathResult:
    """Warm-started path annotated with ``s = |g|_1 / |g_n|_1``.

    The reference ``g_n`` is the least-shrunk end of the path. With fewer
    columns than rows that is the lambda1 = 0 solution (ordinary least squares,
    or ridge when lambda2 > 0), appended as a final entry. Otherwise it is the
    fit at the smallest grid value; if the active set has not levelled off
    there, the grid is continued once down to ``1e-4 * lambda_max``.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if lambdas is None:
        lambdas = default_lambda_grid(X, y, n_lambda, min_ratio)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("empty lambda grid")
    fits = fit_grid(X, y, lambdas, lambda2, tol, max_iter, debug)
    extended = False
    if p < n:
        g = _ridge_endpoint(X, y, lambda2)
        fits.append(FitResult(
            gamma_hat=g, active_set=np.flatnonzero(g), lambda1=0.0, lambda2=float(lambda2),
            iterations=0, converged=True, kkt_violation=kkt_check(X, y, g, 0.0, lambda2),
        ))
        lambdas = np.append(lambdas, 0.0)
    elif extend and lambdas.size > 1 and not _plateaued(fits, n, p):
        lmax = lambda_max(X, y)
        floor = EXTENDED_MIN_RATIO * lmax
        if lambdas[-1] > floor:
            step = np.log(lambdas[-2] / lambdas[-1])
            k = int(np.ceil(np.log(lambdas[-1] / floor) / step))
            more = lambdas[-1] * np.exp(-step * np.arange(1, k + 1))
            more[-1] = floor
            fits += fit_grid(X, y, more, lambda2, tol, max_iter, debug, init=fits[-1].gamma_hat)
            lambdas = np.concatenate([lambdas, more])
            extended = True
    gamma_n = fits[-1].gamma_hat
    norm_n = np.abs(gamma_n).sum()
    entries = []
    for lam, fit in zip(lambdas, fits):
        s = float(np.abs(fit.gamma_hat).sum() / norm_n) if norm_n > 0 else 0.0
        entries.append(PathEntry(float(lam), fit, min(max(s, 0.0), 1.0)))
    return PathResult(entries=entries, gamma_n=gamma_n.copy(), lambda2=float(lambda2), extended=extended)


def index_at_s(path: PathResult, s_target: float) -> int:
    """Index of the entry whose s is nearest ``s_target``; ties go to the smaller lambda."""
    if len(path) == 0:
        raise ValueError("empty path")
    dist = np.abs(path.s_values - s_target)
    best = dist.min()
    return int(np.flatnonzero(dist <= best)[-1])


def solution_at_s(path: PathResult, s_target: float) -> FitResult:
    return path.entries[index_at_s(path, s_target)].fit


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Fold label per row: shuffled, sizes differing by at most one."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"cannot split {n} rows into {folds} nonempty folds")
    perm = np.random.default_rng(seed).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm] = np.arange(n) % folds
    return labels


def cross_validate(X, y, folds: int = 10, lambdas=None, lambda2: float = 0.0, seed: int = 0,
                   tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> CVResult:
    """K-fold CV over a lambda grid (default: the full-data grid).

    Returns the lambda minimising mean held-out squared error, ties going to
    the larger lambda, and the curve of ``(lambda, mean_mse, se)``.
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    labels = fold_assignment(n, folds, seed)
    if lambdas is None:
        lambdas = default_lambda_grid(X, y)
    lambdas = np.asarray(lambdas, dtype=float)
    errs = np.empty((folds, lambdas.size))
    for k in range(folds):
        test = labels == k
        fits = fit_grid(X[~test], y[~test], lambdas, lambda2, tol, max_iter)
        G = np.column_stack([f.gamma_hat for f in fits])
        resid = y[test][:, None] - X[test] @ G
        errs[k] = (resid ** 2).mean(axis=0)
    mean = errs.mean(axis=0)
    se = errs.std(axis=0, ddof=1) / np.sqrt(folds)
    best = int(np.flatnonzero(mean <= mean.min())[0])
    curve = [(float(l), float(m), float(s)) for l, m, s in zip(lambdas, mean, se)]
    return CVResult(float(lambdas[best]), curve)


def write_path_csv(path: PathResult, X, y, out) -> None:
    """Debug dump of ``(lambda1, s, n_active, objective)`` per path entry."""
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda1", "s", "n_active", "objective", "iterations", "converged"])
        for e in path.entries:
            obj = objective(X, y, e.fit.gamma_hat, e.lambda1, path.lambda2)
            w.writerow([e.lambda1, e.s, e.fit.n_active, obj, e.fit.iterations, int(e.fit.converged)])
