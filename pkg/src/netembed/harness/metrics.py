"""Evaluation metrics for node embeddings."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def _pairwise_dot(E: np.ndarray) -> np.ndarray:
    return E @ E.T


def _pairwise_neg_sqdist(E: np.ndarray) -> np.ndarray:
    sq = (E * E).sum(axis=1)
    return -(sq[:, None] + sq[None, :] - 2 * E @ E.T)


def _pairwise_neg_w2(E: np.ndarray) -> np.ndarray:
    """Columns are ``mu_1..mu_L, sigma_1..sigma_L`` (standard deviations)."""
    half = E.shape[1] // 2
    return _pairwise_neg_sqdist(E[:, :half]) + _pairwise_neg_sqdist(E[:, half:]) if half else np.zeros((len(E),) * 2)


SCORERS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "dot": _pairwise_dot,
    "neg_sqdist": _pairwise_neg_sqdist,
    "neg_w2": _pairwise_neg_w2,
}


def score_matrix(embeddings: np.ndarray, scorer: str | Callable = "dot") -> np.ndarray:
    """All-pairs similarity; a callable scorer receives ``(E_i, E_j)``."""
    E = np.asarray(embeddings, dtype=np.float64)
    if isinstance(scorer, str):
        try:
            return SCORERS[scorer](E)
        except KeyError:
            raise ValueError(f"unknown scorer {scorer!r}; expected one of {sorted(SCORERS)}") from None
    n = len(E)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = scorer(E[i], E[j])
    return out


def reconstruction_precision_at_k(S: np.ndarray, embeddings: np.ndarray, k: int,
                                  scorer: str | Callable = "dot") -> float:
    """Share of the ``k`` highest-scoring unordered pairs that are edges of ``S``."""
    S = np.asarray(S)
    n = len(S)
    n_pairs = n * (n - 1) // 2
    if k < 1 or k > n_pairs:
        raise ValueError(f"k must lie in [1, {n_pairs}], got {k}")
    iu, ju = np.triu_indices(n, k=1)
    scores = score_matrix(embeddings, scorer)[iu, ju]
    top = np.argsort(-scores, kind="stable")[:k]
    return float(np.mean(S[iu[top], ju[top]] > 0))


def auc_from_scores(pos: Sequence[float], neg: Sequence[float]) -> float:
    """P(random positive outranks random negative); ties count one half."""
    pos = np.asarray(pos, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def link_prediction_auc(positives, negatives, scorer) -> float:
    """AUC of ``scorer(i, j)`` on held-out positive versus negative pairs.

    ``scorer`` is either a callable on a pair or a precomputed score matrix.
    """
    positives, negatives = list(positives), list(negatives)
    if not positives or not negatives:
        raise ValueError("AUC needs non-empty positive and negative pair sets")
    if set(map(tuple, positives)) & set(map(tuple, negatives)):
        raise ValueError("positive and negative pair sets overlap")
    if callable(scorer):
        f = scorer
    else:
        M = np.asarray(scorer)
        def f(i, j):
            return M[i, j]
    return auc_from_scores([f(*p) for p in positives], [f(*q) for q in negatives])


def average_ranks(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    ra, rb = average_ranks(a), average_ranks(b)
    ra, rb = ra - ra.mean(), rb - rb.mean()
    den = np.sqrt((ra * ra).sum() * (rb * rb).sum())
    if den == 0:
        raise ValueError("rank correlation is undefined for constant input")
    return float((ra * rb).sum() / den)


def centrality_correlation(embeddings: np.ndarray, centrality: Sequence[float]) -> float:
    """Signed Spearman rho of the embedding coordinate that tracks ``centrality`` best."""
    E = np.asarray(embeddings, dtype=np.float64)
    E = E[:, None] if E.ndim == 1 else E
    c = np.asarray(centrality, dtype=np.float64)
    if len(c) < 3 or len(E) != len(c):
        raise ValueError("need at least 3 nodes and matching lengths")
    if np.all(c == c[0]):
        raise ValueError("centrality vector is constant")
    best = None
    for col in E.T:
        if np.all(col == col[0]):
            continue
        rho = spearman(col, c)
        if best is None or abs(rho) > abs(best):
            best = rho
    if best is None:
        raise ValueError("every embedding coordinate is constant")
    return best


def sample_non_edges(S: np.ndarray, count: int, rng: np.random.Generator, exclude=()) -> list[tuple[int, int]]:
    """Distinct unordered non-adjacent pairs, drawn uniformly."""
    n = len(S)
    excluded = {tuple(sorted(p)) for p in exclude}
    iu, ju = np.triu_indices(n, k=1)
    cand = [(int(i), int(j)) for i, j in zip(iu, ju) if S[i, j] == 0 and (i, j) not in excluded]
    if count > len(cand):
        raise ValueError(f"only {len(cand)} non-edges available, asked for {count}")
    pick = rng.choice(len(cand), size=count, replace=False)
    return [cand[i] for i in sorted(pick)]


def holdout_edges(edges: Sequence[tuple], fraction: float, rng: np.random.Generator):
    """Split edge triples into (train, held-out) with ``fraction`` held out."""
    edges = list(edges)
    k = max(1, int(round(fraction * len(edges))))
    pick = set(rng.choice(len(edges), size=k, replace=False).tolist())
    train = [e for i, e in enumerate(edges) if i not in pick]
    test = [e for i, e in enumerate(edges) if i in pick]
    return train, test
