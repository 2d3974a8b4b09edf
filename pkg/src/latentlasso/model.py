"""Joint latent variable model and its population (oracle) quantities.

The model is ``y = beta^T f + eps`` and ``x = A^T f + e`` with
``f ~ (0, I_m)``, ``Var(eps) = sigma2`` and ``Cov(e) = Psi``. All oracle
quantities are computed through the m x m capacitance matrix
``K = A Psi^{-1} A^T + I`` so nothing of size p x p is ever inverted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .covariance import DENSE_LIMIT, CovMatrix, DenseCov, note_dense

RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LatentModelSpec:
    beta: np.ndarray
    A: np.ndarray
    sigma2: float
    psi: CovMatrix
    check_rank: bool = field(default=True, repr=False)

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "A", A)
        if A.shape[0] != beta.size:
            raise ValueError(f"A has {A.shape[0]} rows but beta has length {beta.size}")
        if A.shape[1] != self.psi.dim:
            raise ValueError(f"A has {A.shape[1]} columns but psi has dimension {self.psi.dim}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(beta))):
            raise ValueError("non-finite model parameters")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.check_rank:
            self.check_assumptions()

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    def check_assumptions(self) -> None:
        """Numerical stand-ins for bounded noise spectrum and full-rank loadings."""
        eig = self.psi.eigvalsh()
        if eig[0] <= 0:
            raise ValueError("psi not positive definite")
        sv = np.linalg.svd(self.A, compute_uv=False)
        if sv.size < self.m or sv[-1] <= RANK_TOL * np.sqrt(self.p):
            raise ValueError("loadings are rank deficient: (1/p) A A^T is not of full rank m")

    @cached_property
    def _psi_inv_At(self) -> np.ndarray:
        return np.atleast_2d(self.psi.solve(self.A.T).reshape(self.p, self.m))

    @cached_property
    def capacitance(self) -> np.ndarray:
        """``A Psi^{-1} A^T + I_m``."""
        return self.A @ self._psi_inv_At + np.eye(self.m)

    def sigma_matvec(self, d: np.ndarray) -> np.ndarray:
        """``(A^T A + Psi) d`` without forming the matrix."""
        return self.A.T @ (self.A @ d) + self.psi.matvec(d)

    def sigma_quad(self, d: np.ndarray) -> float:
        """``d^T (A^T A + Psi) d`` evaluated as ``|A d|^2 + d^T Psi d``."""
        d = np.asarray(d, dtype=float)
        ad = self.A @ d
        return float(ad @ ad + self.psi.quad(d))


@dataclass(frozen=True)
class OracleQuantities:
    gamma0: np.ndarray
    l1_norm_gamma0: float
    sigma_cond2: float
    Sigma: np.ndarray | None = None


def oracle_gamma0(model: LatentModelSpec) -> np.ndarray:
    """Best linear predictor ``(A^T A + Psi)^{-1} A^T beta`` via Woodbury.

    Uses ``Psi^{-1} A^T (A Psi^{-1} A^T + I)^{-1} beta``: one m x m solve and
    m applications of ``Psi^{-1}``.
    """
    if not np.any(model.beta):
        return np.zeros(model.p)
    w = np.linalg.solve(model.capacitance, model.beta)
    return model._psi_inv_At @ w


def population_covariance(model: LatentModelSpec, allow_large: bool = False) -> np.ndarray:
    if model.p > DENSE_LIMIT and not allow_large:
        raise MemoryError(f"population covariance for p={model.p} is {8 * model.p ** 2 / 1e6:.0f} MB")
    note_dense(model.p, "population_covariance")
    return model.A.T @ model.A + model.psi.to_dense(allow_large=allow_large)


def conditional_noise_variance(model: LatentModelSpec) -> float:
    """``Var(y | x) = beta^T (A Psi^{-1} A^T + I)^{-1} beta + sigma2``."""
    b = model.beta
    return float(b @ np.linalg.solve(model.capacitance, b)) + model.sigma2


def l1_norm_gamma0(model: LatentModelSpec) -> float:
    return float(np.abs(oracle_gamma0(model)).sum())


def oracle_quantities(model: LatentModelSpec, dense_sigma: bool = False) -> OracleQuantities:
    g = oracle_gamma0(model)
    return OracleQuantities(
        gamma0=g,
        l1_norm_gamma0=float(np.abs(g).sum()),
        sigma_cond2=conditional_noise_variance(model),
        Sigma=population_covariance(model) if dense_sigma else None,
    )


ILLUSTRATIVE_A = np.array([[1.0, -1.0, 1.0, 0.0, 0.0, 0.0],
                           [0.0, 0.0, 0.0, 1.0, -1.0, 1.0]])
ILLUSTRATIVE_BETA = np.array([1.0, 0.1])
ILLUSTRATIVE_NOISE = 1.0 / 16.0


def illustrative_model() -> LatentModelSpec:
    """Two latent groups of three near-duplicate predictors."""
    return LatentModelSpec(
        beta=ILLUSTRATIVE_BETA,
        A=ILLUSTRATIVE_A,
        sigma2=1.0,
        psi=DenseCov(ILLUSTRATIVE_NOISE * np.eye(6)),
    )
