"""Reference implementations shared by the unit and acceptance tests."""

import itertools

import numpy as np

from latentlasso.solver import lambda_max, objective


def grid_oracle(X, y, lambda1, lambda2=0.0, points=21, h_min=1e-9):
    """Brute-force minimiser of the penalised objective.

    Every zero pattern is tried (so exact zeros are representable); on the
    free coordinates a box grid is searched, re-centred on the best point,
    and shrunk only when that point is interior.
    """
    n, p = X.shape
    f0 = y @ y / n
    radius = f0 / max(lambda1, 1e-12) if lambda1 > 0 else 10 * np.sqrt(f0 / max(lambda2, 1e-12))
    best_val, best_g = objective(X, y, np.zeros(p), lambda1, lambda2), np.zeros(p)
    offsets = np.linspace(-1.0, 1.0, points)
    for k in range(1, p + 1):
        for free in itertools.combinations(range(p), k):
            free = list(free)
            Xf = X[:, free]
            centre, half = np.zeros(k), radius
            while half > h_min:
                axes = [centre[i] + half * offsets for i in range(k)]
                G = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, k)
                R = y[:, None] - Xf @ G.T
                vals = (R * R).sum(0) / n + lambda1 * np.abs(G).sum(1) + lambda2 * (G * G).sum(1)
                j = int(np.argmin(vals))
                idx = np.unravel_index(j, (points,) * k)
                centre = G[j]
                interior = all(0 < i < points - 1 for i in idx)
                half = half * 3.0 / (points - 1) if interior else half
            g = np.zeros(p)
            g[free] = centre
            v = objective(X, y, g, lambda1, lambda2)
            if v < best_val:
                best_val, best_g = v, g
    return best_val, best_g


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 21))
    p = int(rng.integers(1, 4))
    X = rng.standard_normal((n, p))
    y = X @ rng.standard_normal(p) + 0.5 * rng.standard_normal(n)
    lam = float(rng.uniform(0.02, 0.9)) * lambda_max(X, y)
    return X, y, lam
