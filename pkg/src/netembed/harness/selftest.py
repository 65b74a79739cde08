"""Quick oracle suites behind ``netembed selftest`` (a few seconds in total)."""
from __future__ import annotations

import numpy as np

from .. import depthlgp, drne, dvne
from .. import tensor as T
from ..gradcheck import finite_diff_check
from ..graph import adjacency
from . import generators, metrics, oracles


def _gradients(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        x = T.parameter(rng.normal(size=(3, 4)))
        w = T.parameter(rng.normal(size=(4, 2)))
        A = T.parameter(rng.normal(size=(3, 3)) + 4 * np.eye(3))
        f = lambda: T.tsum(T.solve(A, T.tanh(T.matmul(x, w))) * T.sigmoid(x[:, :2]))
        worst = max(worst, finite_diff_check(f, [x, w, A]))
    return worst < 1e-6, f"max relative error {worst:.2e}"


def _centralities(rng) -> tuple[bool, str]:
    worst, checked = 0.0, 0
    while checked < 10:
        n = int(rng.integers(3, 9))
        g = generators.erdos_renyi(n, 0.5, int(rng.integers(2**31)))
        if g.components() != 1:
            continue
        A = adjacency(g)
        refs = {"degree": oracles.degree_count(A), "eigenvector": oracles.eigenvector_power(A)[1],
                "pagerank": oracles.pagerank_power(A)}
        for kind, ref in refs.items():
            params, table = drne.construct_centrality_weights(kind, g)
            worst = max(worst, np.abs(drne.linear_aggregate(params, table, g)[:, 1] - ref).max())
        checked += 1
    return worst < 1e-8, f"max deviation {worst:.2e} over {checked} graphs"


def _w2(rng) -> tuple[bool, str]:
    slack = np.inf
    for _ in range(200):
        h = [dvne.GaussianEmbedding(rng.normal(size=3), rng.uniform(0.1, 2, size=3)) for _ in range(3)]
        d = lambda a, b: dvne.w2_distance(h[a], h[b])
        if d(0, 1) != d(1, 0) or d(0, 1) < 0:
            return False, "symmetry or non-negativity violated"
        slack = min(slack, d(0, 2) + d(2, 1) - d(0, 1))
    return slack >= -1e-9, f"min triangle slack {slack:.2e}"


def _block_inverse(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        n, m = int(rng.integers(3, 12)), int(rng.integers(1, 4))
        g = generators.erdos_renyi(n + m, 0.3, int(rng.integers(2**31)))
        A = adjacency(g)
        a = np.r_[rng.uniform(0, 1, n), np.ones(m)]
        M = depthlgp.kernel_precision(A, rng.uniform(0, 3), rng.uniform(0, 3), a)
        z = rng.normal(size=n)
        worst = max(worst, np.abs(depthlgp.predict_latent(M, z) - oracles.gp_conditional_dense(M, n, z)).max())
    return worst < 1e-8, f"max deviation {worst:.2e}"


def _auc(rng) -> tuple[bool, str]:
    pos, neg = rng.integers(0, 5, 30).astype(float), rng.integers(0, 5, 40).astype(float)
    a, b = metrics.auc_from_scores(pos, neg), oracles.auc_pairs(pos, neg)
    return abs(a - b) < 1e-12, f"{a:.6f} vs {b:.6f}"


SUITES = {
    "tensor gradients": _gradients,
    "centrality fixed points": _centralities,
    "w2 metric axioms": _w2,
    "gp block inverse": _block_inverse,
    "auc pair count": _auc,
}


def run_all(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    return [(name, *fn(rng)) for name, fn in SUITES.items()]
