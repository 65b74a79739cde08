"""Slow, independent reference computations used to check the models.

Each oracle recomputes a target quantity by a structurally different route
(dense inverses, explicit loops, sampling, power iteration) so that a shared
bug cannot make implementation and oracle agree.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import sqrtm
from scipy.special import ndtri


# -- Gaussian process --------------------------------------------------------------

def gp_conditional_dense(M: np.ndarray, n_old: int, z_old: np.ndarray) -> np.ndarray:
    """``K_{*,x} K_{x,x}^{-1} z`` with ``K = inv(M)`` formed explicitly."""
    K = np.linalg.inv(M)
    return K[n_old:, :n_old] @ np.linalg.inv(K[:n_old, :n_old]) @ z_old


def criterion_loops(A: np.ndarray, eta: float, zeta: float, a: np.ndarray, z: np.ndarray) -> float:
    """Quadratic criterion of the Laplacian GP prior summed term by term."""
    n = len(z)
    total = sum(z[u] ** 2 for u in range(n))
    for u in range(n):
        for v in range(n):
            diff = (z[u] - z[v]) ** 2
            total += 0.5 * eta * a[u] * A[u, v] * a[v] * diff
            for w in range(n):
                total += 0.5 * zeta * a[u] * A[u, w] * a[w] * a[w] * A[w, v] * a[v] * diff
    return float(total)


# -- Wasserstein ---------------------------------------------------------------------

def w2_quantile_1d(mu1: float, sd1: float, mu2: float, sd2: float, samples: int = 10**6,
                   rng: np.random.Generator | None = None) -> float:
    """1-D W2 by Monte Carlo over the quantile coupling: one uniform draw ``u``
    is pushed through both inverse CDFs, which is the optimal 1-D transport plan."""
    rng = np.random.default_rng(0) if rng is None else rng
    q = ndtri(rng.random(samples))
    x, y = mu1 + sd1 * q, mu2 + sd2 * q
    return float(np.sqrt(np.mean((x - y) ** 2)))


def w2_quantile_diag(mu1, sd1, mu2, sd2, samples: int = 10**6, rng: np.random.Generator | None = None) -> float:
    """Diagonal Gaussians couple dimension by dimension, so squared 1-D costs add."""
    rng = np.random.default_rng(0) if rng is None else rng
    sq = [w2_quantile_1d(a, b, c, d, samples, rng) ** 2 for a, b, c, d in zip(mu1, sd1, mu2, sd2)]
    return float(np.sqrt(sum(sq)))


def w2_general(mu1, cov1, mu2, cov2) -> float:
    """Closed form for arbitrary covariances via matrix square roots."""
    mu1, mu2 = np.asarray(mu1, float), np.asarray(mu2, float)
    cov1, cov2 = np.atleast_2d(cov1).astype(float), np.atleast_2d(cov2).astype(float)
    root2 = np.real(sqrtm(cov2))
    cross = np.real(sqrtm(root2 @ cov1 @ root2))
    sq = np.sum((mu1 - mu2) ** 2) + np.trace(cov1 + cov2 - 2 * cross)
    return float(np.sqrt(max(sq, 0.0)))


# -- centralities --------------------------------------------------------------------

def degree_count(A: np.ndarray) -> np.ndarray:
    n = len(A)
    return np.array([sum(1 for u in range(n) if A[v, u] > 0) for v in range(n)], dtype=float)


def eigenvector_power(A: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Leading eigenpair by power iteration on ``A + I`` (shift avoids bipartite
    oscillation); the vector is unit-norm and positive."""
    n = len(A)
    B = A + np.eye(n)
    x = np.ones(n) / np.sqrt(n)
    for _ in range(max_iter):
        y = B @ x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    lam = float(x @ A @ x)
    return lam, x


def pagerank_power(A: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000) -> np.ndarray:
    """Stationary distribution of the lazy random walk (same fixed point as the
    plain walk, but aperiodic)."""
    n = len(A)
    P = A / A.sum(axis=1, keepdims=True)
    lazy = 0.5 * (P + np.eye(n))
    pi = np.ones(n) / n
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.max(np.abs(nxt - pi)) < tol:
            pi = nxt
            break
        pi = nxt
    return pi / pi.sum()


# -- pairwise counters -----------------------------------------------------------------

def auc_pairs(pos, neg) -> float:
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def precision_at_k_loops(S: np.ndarray, scores: np.ndarray, k: int) -> float:
    n = len(S)
    pairs = [(scores[i, j], i, j) for i in range(n) for j in range(i + 1, n)]
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    return sum(1 for _, i, j in pairs[:k] if S[i, j] > 0) / k


def first_order_loops(S: np.ndarray, Y: np.ndarray) -> float:
    n = len(S)
    return float(sum(S[i, j] * np.sum((Y[i] - Y[j]) ** 2) for i in range(n) for j in range(n)))


def spearman_loops(a, b) -> float:
    """Pearson correlation of average ranks, ranks computed by counting."""
    def ranks(x):
        x = list(x)
        return np.array([sum(1 for y in x if y < v) + 0.5 * (sum(1 for y in x if y == v) - 1) + 1 for v in x])
    ra, rb = ranks(a), ranks(b)
    ra, rb = ra - ra.mean(), rb - rb.mean()
    return float(ra @ rb / np.sqrt((ra @ ra) * (rb @ rb)))
