"""Symmetric positive-definite covariance matrices with matrix-free operations.

Every covariance exposes the same handful of operations (``matvec``,
``solve``, ``sqrt_apply``, ``quad``, ``eigvalsh``) so that callers never need
the dense ``p x p`` array. Dense materialisation goes through
:meth:`CovMatrix.to_dense`, which refuses dimensions above ``DENSE_LIMIT``
unless explicitly forced and reports every dense allocation to the audit
hooks registered with :func:`dense_audit`.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterator

import numpy as np
import scipy.fft
import scipy.linalg

DENSE_LIMIT = 2000

_dense_hooks: list[Callable[[int, str], None]] = []


def note_dense(dim: int, what: str) -> None:
    """Report a dense ``dim x dim`` allocation to the registered audit hooks."""
    for hook in _dense_hooks:
        hook(dim, what)


@contextlib.contextmanager
def dense_audit() -> Iterator[list[tuple[int, str]]]:
    """Collect every dense square allocation made inside the block."""
    seen: list[tuple[int, str]] = []
    hook = lambda dim, what: seen.append((dim, what))  # noqa: E731
    _dense_hooks.append(hook)
    try:
        yield seen
    finally:
        _dense_hooks.remove(hook)


def _as_2d(v: np.ndarray) -> tuple[np.ndarray, bool]:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return v[:, None], True
    return v, False


class CovMatrix:
    """Base class; subclasses implement ``_apply(v, fn)`` for fn in psi/sqrt/inv."""

    dim: int

    def _apply(self, v: np.ndarray, fn: str) -> np.ndarray:
        raise NotImplementedError

    def _dispatch(self, v, fn):
        v2, flat = _as_2d(v)
        if v2.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim} rows, got {v2.shape[0]}")
        out = self._apply(v2, fn)
        return out[:, 0] if flat else out

    def matvec(self, v):
        """Return ``Psi @ v`` for a vector or a ``p x k`` block."""
        return self._dispatch(v, "psi")

    def solve(self, v):
        """Return ``Psi^{-1} @ v``."""
        return self._dispatch(v, "inv")

    def sqrt_apply(self, v):
        """Return ``L @ v`` for a fixed factor with ``L L^T = Psi``."""
        return self._dispatch(v, "sqrt")

    def quad(self, d) -> float:
        d = np.asarray(d, dtype=float)
        return float(d @ self.matvec(d))

    def eigvalsh(self) -> np.ndarray:
        raise NotImplementedError

    def diagonal(self) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self, allow_large: bool = False) -> np.ndarray:
        if self.dim > DENSE_LIMIT and not allow_large:
            raise MemoryError(
                f"refusing to materialise a dense {self.dim}x{self.dim} covariance "
                f"(limit {DENSE_LIMIT}); pass allow_large=True to override"
            )
        note_dense(self.dim, type(self).__name__)
        return self.matvec(np.eye(self.dim))

    @property
    def entries(self) -> np.ndarray:
        return self.to_dense()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` rows from N(0, Psi); returns an ``n x p`` array."""
        z = rng.standard_normal((self.dim, n))
        return np.ascontiguousarray(self.sqrt_apply(z).T)


class DiagonalCov(CovMatrix):
    def __init__(self, diag):
        diag = np.asarray(diag, dtype=float)
        if diag.ndim != 1 or diag.size == 0:
            raise ValueError("diagonal covariance needs a non-empty vector")
        if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
            raise ValueError("psi not positive definite")
        self.diag = diag
        self.dim = diag.size

    def _apply(self, v, fn):
        if fn == "psi":
            w = self.diag
        elif fn == "inv":
            w = 1.0 / self.diag
        else:
            w = np.sqrt(self.diag)
        return w[:, None] * v

    def eigvalsh(self):
        return np.sort(self.diag)

    def diagonal(self):
        return self.diag.copy()

    def to_dense(self, allow_large: bool = False):
        if self.dim > DENSE_LIMIT and not allow_large:
            raise MemoryError(f"refusing to materialise a dense {self.dim}x{self.dim} covariance")
        note_dense(self.dim, "DiagonalCov")
        return np.diag(self.diag)


class DenseCov(CovMatrix):
    """Explicit matrix with a cached lower Cholesky factor."""

    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise ValueError("covariance must be a non-empty square matrix")
        if not np.all(np.isfinite(entries)):
            raise ValueError("covariance has non-finite entries")
        scale = max(np.abs(entries).max(), 1e-300)
        if np.abs(entries - entries.T).max() > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        self._entries = 0.5 * (entries + entries.T)
        self.dim = entries.shape[0]
        try:
            self.cholesky = np.linalg.cholesky(self._entries)
        except np.linalg.LinAlgError:
            raise ValueError("psi not positive definite") from None

    def _apply(self, v, fn):
        if fn == "psi":
            return self._entries @ v
        if fn == "inv":
            return scipy.linalg.cho_solve((self.cholesky, True), v)
        return self.cholesky @ v

    def eigvalsh(self):
        return np.linalg.eigvalsh(self._entries)

    def diagonal(self):
        return np.diag(self._entries).copy()

    def to_dense(self, allow_large: bool = False):
        note_dense(self.dim, "DenseCov")
        return self._entries.copy()


class MixingRotation:
    """Structured random orthogonal map ``H D3 H D2 H D1 P``.

    ``H`` is the orthonormal DCT-II, ``D_i`` random sign flips and ``P`` a
    random permutation. Applies in O(p log p) and stores O(p) numbers.
    """

    def __init__(self, p: int, rng: np.random.Generator, rounds: int = 3):
        self.dim = p
        self.perm = rng.permutation(p)
        self.signs = rng.choice(np.array([-1.0, 1.0]), size=(rounds, p))

    def apply(self, v: np.ndarray) -> np.ndarray:
        x = v[self.perm]
        for s in self.signs:
            x = scipy.fft.dct(s[:, None] * x, type=2, norm="ortho", axis=0)
        return x

    def apply_t(self, v: np.ndarray) -> np.ndarray:
        x = v
        for s in self.signs[::-1]:
            x = s[:, None] * scipy.fft.idct(x, type=2, norm="ortho", axis=0)
        out = np.empty_like(x)
        out[self.perm] = x
        return out


class SpectralCov(CovMatrix):
    """``Q diag(eigenvalues) Q^T`` with ``Q`` dense orthogonal or a :class:`MixingRotation`."""

    def __init__(self, eigenvalues, basis):
        lam = np.asarray(eigenvalues, dtype=float)
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("psi not positive definite")
        self.eigenvalues = lam
        self.basis = basis
        self.dim = lam.size

    def _q(self, v):
        return self.basis @ v if isinstance(self.basis, np.ndarray) else self.basis.apply(v)

    def _qt(self, v):
        return self.basis.T @ v if isinstance(self.basis, np.ndarray) else self.basis.apply_t(v)

    def _apply(self, v, fn):
        w = {"psi": self.eigenvalues, "inv": 1.0 / self.eigenvalues,
             "sqrt": np.sqrt(self.eigenvalues)}[fn]
        return self._q(w[:, None] * self._qt(v))

    def eigvalsh(self):
        return np.sort(self.eigenvalues)

    def diagonal(self):
        if isinstance(self.basis, np.ndarray):
            return np.einsum("ij,j,ij->i", self.basis, self.eigenvalues, self.basis)
        out = np.empty(self.dim)
        for lo in range(0, self.dim, 128):
            hi = min(lo + 128, self.dim)
            eye = np.zeros((self.dim, hi - lo))
            eye[np.arange(lo, hi), np.arange(hi - lo)] = 1.0
            rows = self._qt(eye)
            out[lo:hi] = np.einsum("jk,j,jk->k", rows, self.eigenvalues, rows)
        return out


_SPECTRAL_FNS = {
    "psi": lambda x: x,
    "inv": lambda x: 1.0 / x,
    "sqrt": np.sqrt,
}


class BlockClippedCov(CovMatrix):
    """Eigenvalue-clipped ``blockdiag(T_1, ..., T_k) + rho_between * (11^T - blockdiag(J))``.

    Blocks are contiguous with sizes differing by at most one and every block
    of a given size shares the same Toeplitz matrix ``rho_within^|i-j|``.
    The subspace S of vectors that are identical across same-size blocks is
    invariant and contains the all-ones vector, so on S the raw matrix reduces
    to a small ``R = W^T Psi_raw W`` while on S-perp it acts block-diagonally.
    Any spectral function ``g`` therefore satisfies
    ``g(Psi_raw) = blockdiag(g(M)) + W (g(R) - blockdiag_s(g(M_s))) W^T``,
    which is exact and never forms a ``p x p`` array.
    """

    def __init__(self, p: int, n_blocks: int, rho_within: float = 0.8,
                 rho_between: float = 0.1, clip: tuple[float, float] = (0.1, 3.0)):
        if p < 1 or not 1 <= n_blocks <= p:
            raise ValueError("need p >= 1 and 1 <= n_blocks <= p")
        lo, hi = clip
        if not 0 < lo <= hi:
            raise ValueError("clip bounds must satisfy 0 < lower <= upper")
        self.dim = p
        self.n_blocks = n_blocks
        self.rho_within = rho_within
        self.rho_between = rho_between
        self.clip = (float(lo), float(hi))

        q, r = divmod(p, n_blocks)
        # (start, count, size) per region of equal-size blocks, array_split order
        regions = []
        if r:
            regions.append((0, r, q + 1))
        if n_blocks - r:
            regions.append((r * (q + 1), n_blocks - r, q))
        self.regions = regions

        self._block_eig = {}
        for _, _, s in regions:
            idx = np.arange(s)
            m = rho_within ** np.abs(idx[:, None] - idx[None, :]) - rho_between
            self._block_eig[s] = np.linalg.eigh(m)
        blocks = [self._block_eig[s][1] @ np.diag(self._block_eig[s][0]) @ self._block_eig[s][1].T
                  for _, _, s in regions]
        w = np.concatenate([np.full(s, np.sqrt(c)) for _, c, s in regions])
        raw_r = scipy.linalg.block_diag(*blocks) + rho_between * np.outer(w, w)
        self._r_eig = np.linalg.eigh(raw_r)
        self._cache: dict[str, tuple[dict[int, np.ndarray], np.ndarray]] = {}

    def _clip(self, x):
        return np.clip(x, *self.clip)

    def _pieces(self, fn):
        if fn not in self._cache:
            g = _SPECTRAL_FNS[fn]
            blk = {s: v @ np.diag(g(self._clip(d))) @ v.T for s, (d, v) in self._block_eig.items()}
            d, v = self._r_eig
            gr = v @ np.diag(g(self._clip(d))) @ v.T
            corr = gr - scipy.linalg.block_diag(*[blk[s] for _, _, s in self.regions])
            self._cache[fn] = (blk, corr)
        return self._cache[fn]

    def _apply(self, v, fn):
        blk, corr = self._pieces(fn)
        k = v.shape[1]
        out = np.empty_like(v)
        proj = []
        for start, c, s in self.regions:
            vr = v[start:start + c * s].reshape(c, s, k)
            out[start:start + c * s] = np.einsum("ij,cjk->cik", blk[s], vr).reshape(c * s, k)
            proj.append(vr.sum(axis=0) / np.sqrt(c))
        w = corr @ np.concatenate(proj, axis=0)
        off = 0
        for start, c, s in self.regions:
            add = w[off:off + s] / np.sqrt(c)
            seg = out[start:start + c * s].reshape(c, s, k)
            seg += add[None]
            off += s
        return out

    def raw_dense(self) -> np.ndarray:
        """Pre-clip matrix; only for small ``p`` inspection and testing."""
        if self.dim > DENSE_LIMIT:
            raise MemoryError("raw block matrix is dense")
        note_dense(self.dim, "BlockClippedCov.raw")
        out = np.full((self.dim, self.dim), self.rho_between)
        for start, c, s in self.regions:
            idx = np.arange(s)
            t = self.rho_within ** np.abs(idx[:, None] - idx[None, :])
            for b in range(c):
                lo = start + b * s
                out[lo:lo + s, lo:lo + s] = t
        return out

    def eigvalsh(self):
        parts = [self._clip(self._r_eig[0])]
        for _, c, s in self.regions:
            if c > 1:
                parts.append(np.repeat(self._clip(self._block_eig[s][0]), c - 1))
        return np.sort(np.concatenate(parts))

    def diagonal(self):
        blk, corr = self._pieces("psi")
        out = np.empty(self.dim)
        off = 0
        for start, c, s in self.regions:
            d = np.diag(blk[s]) + np.diag(corr)[off:off + s] / c
            out[start:start + c * s] = np.tile(d, c)
            off += s
        return out

