"""Deep hyper-network embedding for 3-uniform heterogeneous hypergraphs.

Each node type has its own sigmoid autoencoder over full hyper-adjacency
rows.  The three type codes of a candidate tuple pass through a joint
sigmoid layer and a scalar sigmoid head, giving a non-linear tuplewise
similarity that is trained against sampled corruptions.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .errors import DivergenceError
from .graph import HyperGraph, hyper_adjacency
from .nn import dense, dense_params
from .optim import Optimizer
from .tensor import NumericalError, ShapeError, Tensor

log = logging.getLogger(__name__)

TUPLE_SIZE = 3
NOISE_EXPONENT = 0.75
MAX_REJECTIONS = 100


class DenseHypergraphError(RuntimeError):
    """No unseen corruption was found within the rejection budget."""


@dataclass
class DhneConfig:
    dim: int = 16
    joint: int = 32
    alpha: float = 1.0
    batch_size: int = 16
    negatives: int = 1
    epochs: int = 50
    lr: float = 0.01
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.negatives < 1:
            raise ValueError("negatives must be at least 1")


@dataclass
class DhneModel:
    n_types: int
    params: dict[str, Tensor]
    config: DhneConfig
    history: list[float] = field(default_factory=list)

    @classmethod
    def init(cls, n: int, n_types: int, config: DhneConfig, rng: np.random.Generator) -> "DhneModel":
        if n_types != TUPLE_SIZE:
            raise ValueError(f"only {TUPLE_SIZE} node types are supported, got {n_types}")
        params: dict[str, Tensor] = {}
        for t in range(n_types):
            params.update(dense_params(rng, n, config.dim, f"enc{t}"))
            params.update(dense_params(rng, config.dim, n, f"dec{t}"))
        for t in range(n_types):
            params.update(dense_params(rng, config.dim, config.joint, f"joint{t}"))
        del params["joint1.b"], params["joint2.b"]  # one shared joint bias
        params.update(dense_params(rng, config.joint, 1, "out"))
        return cls(n_types=n_types, params=params, config=config)

    def autoencoder_params(self) -> list[Tensor]:
        return [p for k, p in self.params.items() if k.startswith(("enc", "dec"))]

    def state(self) -> tuple[dict[str, np.ndarray], dict]:
        return {k: v.data for k, v in self.params.items()}, {"n_types": self.n_types, "config": asdict(self.config)}

    @classmethod
    def from_state(cls, arrays: dict, meta: dict) -> "DhneModel":
        params = {k: T.parameter(v, name=k) for k, v in arrays.items()}
        return cls(n_types=meta["n_types"], params=params, config=DhneConfig(**meta["config"]))


def _check_type(model: DhneModel, t: int) -> None:
    if not isinstance(t, (int, np.integer)) or not 0 <= t < model.n_types:
        raise KeyError(f"unknown node type {t!r}; model has types 0..{model.n_types - 1}")


def encode_type(model: DhneModel, t: int, rows) -> Tensor:
    _check_type(model, t)
    rows = T.tensor(rows)
    n_in = model.params[f"enc{t}.W"].shape[0]
    if rows.shape[-1] != n_in:
        raise ShapeError(f"encode_type: row width {rows.shape[-1]} does not match input width {n_in}")
    return T.sigmoid(dense(model.params, f"enc{t}", rows))


def decode_type(model: DhneModel, t: int, codes) -> Tensor:
    _check_type(model, t)
    codes = T.tensor(codes)
    if codes.shape[-1] != model.config.dim:
        raise ShapeError(f"decode_type: code width {codes.shape[-1]} does not match dim {model.config.dim}")
    return T.sigmoid(dense(model.params, f"dec{t}", codes))


def tuplewise_similarity(model: DhneModel, x_a, x_b, x_c) -> Tensor:
    """Score in (0, 1) for codes of types 0, 1, 2 (rows may be a batch)."""
    codes = [T.tensor(x) for x in (x_a, x_b, x_c)]
    for t, x in enumerate(codes):
        if x.shape[-1] != model.config.dim:
            raise ShapeError(f"tuplewise_similarity: code {t} has width {x.shape[-1]}, expected {model.config.dim}")
    p = model.params
    pre = p["joint0.b"]
    for t, x in enumerate(codes):
        pre = pre + T.matmul(x, p[f"joint{t}.W"])
    joint = T.sigmoid(pre)
    s = T.sigmoid(dense(p, "out", joint))
    return s.reshape(s.shape[:-1])


def loss_first_order(S, R) -> Tensor:
    """Summed binary cross-entropy of scores ``S`` against 0/1 labels ``R``."""
    S = T.tensor(S)
    R = np.asarray(R, dtype=np.float64)
    return -T.tsum(R * T.log(S) + (1.0 - R) * T.log(1.0 - S))


def loss_second_order(rows, recon) -> Tensor:
    """Squared reconstruction error restricted to the non-zero entries of ``rows``."""
    rows = np.asarray(rows, dtype=np.float64)
    mask = np.sign(np.abs(rows))
    return T.sqnorm(mask * (rows - T.tensor(recon)))


def _noise_weights(hg: HyperGraph) -> np.ndarray:
    return np.asarray(hg.degrees, dtype=np.float64) ** NOISE_EXPONENT


def negative_sample(edge, hg: HyperGraph, rng: np.random.Generator,
                    max_tries: int = MAX_REJECTIONS, weights: np.ndarray | None = None) -> tuple[int, ...]:
    """Replace one position with a same-type node drawn from P(v) ~ d_v^0.75,
    rejecting corruptions that are existing hyperedges."""
    edge = tuple(int(v) for v in edge)
    w = _noise_weights(hg) if weights is None else weights
    types = np.asarray(hg.node_types)
    for t in range(hg.n_types):
        if len(hg.nodes_of_type(t)) < 2:
            raise ValueError(f"negative sampling needs at least 2 nodes of type {t}")
    for _ in range(max_tries):
        pos = int(rng.integers(len(edge)))
        pool = np.flatnonzero(types == types[edge[pos]])
        p = w[pool]
        if p.sum() <= 0:
            continue
        v = int(rng.choice(pool, p=p / p.sum()))
        cand = edge[:pos] + (v,) + edge[pos + 1:]
        if v != edge[pos] and cand not in hg.edge_set:
            return cand
    raise DenseHypergraphError(f"no unseen corruption of {edge} after {max_tries} tries; hypergraph too dense")


def _ordered(hg: HyperGraph, edge) -> tuple[int, ...]:
    """Tuple with its member of type t at position t."""
    by_type = sorted(edge, key=lambda v: hg.node_types[v])
    if [hg.node_types[v] for v in by_type] != list(range(TUPLE_SIZE)):
        raise ValueError(f"hyperedge {tuple(edge)} does not hold one node of each of the {TUPLE_SIZE} types")
    return tuple(by_type)


def score_tuples(model: DhneModel, A: np.ndarray, tuples, node_types) -> Tensor:
    """Similarity for each tuple of node ids ordered by type."""
    tuples = np.asarray(tuples, dtype=int).reshape(-1, TUPLE_SIZE)
    node_types = np.asarray(node_types)
    for j in range(TUPLE_SIZE):
        bad = node_types[tuples[:, j]] != j
        if bad.any():
            raise ValueError(f"position {j} expects type {j}, got node {int(tuples[bad, j][0])}")
    codes = [encode_type(model, j, A[tuples[:, j]]) for j in range(TUPLE_SIZE)]
    return tuplewise_similarity(model, *codes)


def batch_loss(model: DhneModel, A: np.ndarray, node_types, positives, negatives) -> Tensor:
    """Mean cross-entropy over the tuples plus ``alpha`` times the mean masked
    reconstruction error of the distinct nodes they touch."""
    node_types = np.asarray(node_types)
    tuples = np.vstack([np.asarray(positives, dtype=int).reshape(-1, TUPLE_SIZE),
                        np.asarray(negatives, dtype=int).reshape(-1, TUPLE_SIZE)])
    R = np.r_[np.ones(len(positives)), np.zeros(len(negatives))]
    S = score_tuples(model, A, tuples, node_types)
    loss = loss_first_order(S, R) / len(tuples)
    if model.config.alpha:
        nodes = np.unique(tuples)
        rec = None
        for t in range(model.n_types):
            sel = nodes[node_types[nodes] == t]
            if len(sel) == 0:
                continue
            rows = A[sel]
            term = loss_second_order(rows, decode_type(model, t, encode_type(model, t, rows)))
            rec = term if rec is None else rec + term
        loss = loss + model.config.alpha * rec / len(nodes)
    return loss


def embed(model: DhneModel, hg: HyperGraph, A: np.ndarray | None = None) -> np.ndarray:
    A = hyper_adjacency(hg) if A is None else A
    types = np.asarray(hg.node_types)
    out = np.zeros((hg.n, model.config.dim))
    for t in range(model.n_types):
        sel = np.flatnonzero(types == t)
        if len(sel):
            out[sel] = encode_type(model, t, A[sel]).numpy()
    return out


def train(hg: HyperGraph, config: DhneConfig) -> tuple[DhneModel, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    A = hyper_adjacency(hg)
    model = DhneModel.init(hg.n, hg.n_types, config, rng)
    # decoders only see gradient through the reconstruction term
    trainable = [p for k, p in model.params.items() if config.alpha or not k.startswith("dec")]
    opt = Optimizer(trainable, kind=config.optimizer, lr=config.lr)
    edges = np.array([_ordered(hg, e) for e in hg.hyperedges], dtype=int)
    weights = _noise_weights(hg)
    for epoch in range(config.epochs):
        order = rng.permutation(len(edges))
        total = 0.0
        for start in range(0, len(edges), config.batch_size):
            pos = edges[order[start:start + config.batch_size]]
            neg = [_ordered(hg, negative_sample(e, hg, rng, weights=weights))
                   for e in pos for _ in range(config.negatives)]
            try:
                opt.zero_grad()
                loss = batch_loss(model, A, hg.node_types, pos, neg)
                total += loss.item() * len(pos)
                opt.step(loss.backward())
            except NumericalError as exc:
                raise DivergenceError("dhne", epoch, str(exc)) from exc
        model.history.append(total / len(edges))
    return model, embed(model, hg, A)


def similarity(model: DhneModel, hg: HyperGraph, triple, A: np.ndarray | None = None) -> float:
    """Similarity of three node ids given in any order (one per type)."""
    A = hyper_adjacency(hg) if A is None else A
    return float(score_tuples(model, A, [_ordered(hg, triple)], hg.node_types).numpy()[0])
