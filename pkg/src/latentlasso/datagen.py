"""Loadings, noise covariances and samples from the latent model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .covariance import DENSE_LIMIT, BlockClippedCov, CovMatrix, DiagonalCov, MixingRotation, SpectralCov
from .model import ILLUSTRATIVE_A, ILLUSTRATIVE_BETA, ILLUSTRATIVE_NOISE, LatentModelSpec, illustrative_model, oracle_gamma0

PSI_KINDS = ("identity", "heteroscedastic_diag", "block_toeplitz", "random_dense")

PSI_DEFAULTS: dict[str, dict[str, Any]] = {
    "identity": {"scale": 1.0},
    "heteroscedastic_diag": {"low": (0.01, 0.1), "high": (0.5, 2.0)},
    "block_toeplitz": {"rho_within": 0.8, "rho_between": 0.1, "clip": (0.1, 3.0)},
    "random_dense": {"eig_range": (0.1, 3.0), "dense_limit": DENSE_LIMIT},
}


@dataclass(frozen=True)
class PsiSpec:
    kind: str
    p: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PSI_KINDS:
            raise ValueError(f"unknown psi kind {self.kind!r}; expected one of {PSI_KINDS}")
        if self.p < 1:
            raise ValueError("psi dimension must be positive")
        unknown = set(self.params) - set(PSI_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")

    def param(self, name: str):
        return self.params.get(name, PSI_DEFAULTS[self.kind][name])


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    factors: np.ndarray | None = None
    gamma0: np.ndarray | None = None
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"X is {self.X.shape} but y is {self.y.shape}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def generate_loadings(m: int, p: int, density: float, seed: int) -> np.ndarray:
    """``m x p`` loadings with ``round(density * p)`` Uniform(-1, 1) entries per row."""
    if m < 1 or p < 1:
        raise ValueError("m and p must be positive")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if density * p < 1:
        raise ValueError("degenerate loading density")
    k = min(p, math.floor(density * p + 0.5))
    rng = np.random.default_rng(seed)
    A = np.zeros((m, p))
    for i in range(m):
        idx = rng.choice(p, size=k, replace=False)
        A[i, idx] = rng.uniform(-1.0, 1.0, size=k)
    return A


def build_psi(spec: PsiSpec) -> CovMatrix:
    p = spec.p
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "identity":
        return DiagonalCov(np.full(p, float(spec.param("scale"))))
    if spec.kind == "heteroscedastic_diag":
        lo, hi = spec.param("low"), spec.param("high")
        diag = np.empty(p)
        perm = rng.permutation(p)
        n_low = p // 2
        diag[perm[:n_low]] = rng.uniform(*lo, size=n_low)
        diag[perm[n_low:]] = rng.uniform(*hi, size=p - n_low)
        return DiagonalCov(diag)
    if spec.kind == "block_toeplitz":
        return BlockClippedCov(
            p,
            n_blocks=math.ceil(math.sqrt(p)),
            rho_within=spec.param("rho_within"),
            rho_between=spec.param("rho_between"),
            clip=tuple(spec.param("clip")),
        )
    # random_dense
    lo, hi = spec.param("eig_range")
    if p <= spec.param("dense_limit"):
        q, r = np.linalg.qr(rng.standard_normal((p, p)))
        q *= np.sign(np.diag(r))
        basis = q
    else:
        basis = MixingRotation(p, rng)
    return SpectralCov(rng.uniform(lo, hi, size=p), basis)


def sample_dataset(model: LatentModelSpec, n: int, seed: int, gamma0: np.ndarray | None = None) -> Dataset:
    """``n`` i.i.d. rows of ``(x, y)``; draw order is factors, response noise, predictor noise."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n, model.m))
    eps = np.sqrt(model.sigma2) * rng.standard_normal(n)
    E = model.psi.sample(rng, n)
    X = F @ model.A + E
    y = F @ model.beta + eps
    if gamma0 is None:
        gamma0 = oracle_gamma0(model)
    return Dataset(X=np.asfortranarray(X), y=y, factors=F, gamma0=gamma0)


def illustrative_dataset(n: int, seed: int) -> Dataset:
    """Two Uniform(0, 20) factors, each driving three near-collinear predictors."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    Z = rng.uniform(0.0, 20.0, size=(n, 2))
    y = Z @ ILLUSTRATIVE_BETA + rng.standard_normal(n)
    X = Z @ ILLUSTRATIVE_A + np.sqrt(ILLUSTRATIVE_NOISE) * rng.standard_normal((n, 6))
    return Dataset(X=np.asfortranarray(X), y=y, factors=Z, gamma0=oracle_gamma0(illustrative_model()))


@dataclass(frozen=True)
class ModelConfig:
    """Serializable recipe for a :class:`LatentModelSpec`."""

    m: int = 3
    p: int = 100
    beta: tuple[float, ...] = (1.0, 1.0, 1.0)
    loading_seed: int = 0
    loading_density: float = 0.2
    sigma2: float = 1.0
    psi_kind: str = "identity"
    psi_seed: int = 0
    psi_params: dict[str, Any] = field(default_factory=dict)

    def build(self) -> LatentModelSpec:
        if len(self.beta) != self.m:
            raise ValueError(f"beta has length {len(self.beta)} but m = {self.m}")
        A = generate_loadings(self.m, self.p, self.loading_density, self.loading_seed)
        psi = build_psi(PsiSpec(self.psi_kind, self.p, self.psi_seed, dict(self.psi_params)))
        return LatentModelSpec(beta=np.array(self.beta, dtype=float), A=A, sigma2=self.sigma2, psi=psi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "m": self.m, "p": self.p, "beta": list(self.beta),
            "loading_seed": self.loading_seed, "loading_density": self.loading_density,
            "sigma2": self.sigma2, "psi_kind": self.psi_kind, "psi_seed": self.psi_seed,
            "psi_params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.psi_params.items()},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown model config fields: {sorted(unknown)}")
        d = dict(d)
        if "beta" in d:
            d["beta"] = tuple(float(b) for b in d["beta"])
        if "psi_params" in d:
            d["psi_params"] = {k: tuple(v) if isinstance(v, list) else v for k, v in d["psi_params"].items()}
        return cls(**d)
