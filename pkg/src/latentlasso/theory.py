"""Prediction bounds and spectral diagnostics of the design.

The fast-rate bound for the latent model reads, with
``B = C sigma2 ((m + c0/p)^{1/2} / (sqrt(2) - 1) + t)``::

    lambda = B^{4/3} |gamma0|_1^{-1/3}
    (1/n) |X (gamma0 - gamma_hat)|^2 <= (21 / (2n)) B^{4/3} |gamma0|_1^{2/3}

with probability at least ``1 - exp(-t^2)``, for ``p >= n`` and ``p >= c0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EIG_FLOOR = 1e-10


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    m: int
    partial_effective_rank: float
    p: int | None = None


@dataclass(frozen=True)
class BoundInputs:
    C: float
    c0: float
    t: float
    sigma2: float
    m: int
    p: int
    n: int
    l1_gamma0: float

    def __post_init__(self):
        for name in ("C", "c0", "t", "sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.m < 0 or self.n < 1 or self.p < 1:
            raise ValueError("need m >= 0, n >= 1, p >= 1")
        if self.l1_gamma0 < 0:
            raise ValueError("l1_gamma0 must be nonnegative")
        if self.p < self.c0:
            raise ValueError(f"the bound needs p >= c0 (p={self.p}, c0={self.c0})")


def empirical_spectrum(X, m: int) -> SpectrumReport:
    """Eigenvalues of ``X^T X / n`` (via the n x n Gram matrix when p > n)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 1:
        raise ValueError("need at least one row")
    if m >= n:
        raise ValueError("spike count exceeds sample rank")
    if m < 0:
        raise ValueError("m must be nonnegative")
    gram = X @ X.T / n if p > n else X.T @ X / n
    eig = np.linalg.eigvalsh(gram)[::-1]
    eig = np.where(eig < EIG_FLOOR, 0.0, eig)
    return SpectrumReport(eig, m, partial_effective_rank(eig, m), p)


def partial_effective_rank(eigenvalues, m: int) -> float:
    """``(1/w_1) * sum_{j > m} w_j`` over the sorted (descending) eigenvalues."""
    eig = np.asarray(eigenvalues, dtype=float)
    if eig.size == 0 or eig[0] <= 0:
        return 0.0
    return float(eig[m:].sum() / eig[0])


def estimate_c0(spectrum: SpectrumReport, method: str = "partial_effective_rank") -> float:
    """Heuristic for the bound's constant ``c0``.

    ``partial_effective_rank`` (default) returns the partial effective rank;
    ``eigen_ratio`` returns ``p * w_{m+1} / w_1``, the quantity assumed O(1).
    """
    eig = spectrum.eigenvalues
    if eig.size == 0 or eig[0] <= 0:
        raise ValueError("leading eigenvalue is zero")
    if method == "partial_effective_rank":
        return spectrum.partial_effective_rank
    if method == "eigen_ratio":
        if spectrum.p is None:
            raise ValueError("eigen_ratio needs the number of columns p")
        nxt = eig[spectrum.m] if spectrum.m < eig.size else 0.0
        return float(spectrum.p * nxt / eig[0])
    raise ValueError(f"unknown c0 method {method!r}")


def simple_bound(lambda1: float, l1_gamma0: float, n: int) -> float:
    """``(2/n) lambda |gamma0|_1``, valid for any design on the noise event."""
    if lambda1 < 0 or l1_gamma0 < 0 or n < 1:
        raise ValueError("inputs must be nonnegative and n >= 1")
    return 2.0 / n * lambda1 * l1_gamma0


def _core(b: BoundInputs) -> float:
    return b.C * b.sigma2 * (math.sqrt(b.m + b.c0 / b.p) / (math.sqrt(2.0) - 1.0) + b.t)


def fast_rate_lambda(b: BoundInputs) -> float:
    if b.l1_gamma0 <= 0:
        raise ValueError("penalty is undefined for |gamma0|_1 = 0")
    return _core(b) ** (4.0 / 3.0) * b.l1_gamma0 ** (-1.0 / 3.0)


def fast_rate_bound(b: BoundInputs) -> tuple[float, float]:
    """Returns ``(bound, confidence)`` with confidence ``1 - exp(-t^2)``."""
    if b.p < b.n:
        raise ValueError("the fast-rate bound requires p >= n")
    bound = 21.0 / (2.0 * b.n) * _core(b) ** (4.0 / 3.0) * b.l1_gamma0 ** (2.0 / 3.0)
    return bound, 1.0 - math.exp(-b.t ** 2)
