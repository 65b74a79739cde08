"""Deep recursive network embedding.

Each node's embedding is regressed onto a layer-normalised LSTM run over its
neighbours' embeddings, neighbours ordered by degree.  A small ReLU MLP reading
the same aggregate must also predict ``log(d_v + 1)``; this keeps the
embeddings away from the all-zero solution.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .errors import DisconnectedNodeError, DivergenceError
from .graph import Graph, adjacency, degree_biased_sample
from .nn import dense, dense_params, xavier_uniform
from .optim import Optimizer
from .tensor import NumericalError, Tensor

log = logging.getLogger(__name__)

ADAM_LR = 0.0025
NEIGHBOR_CAP = 300
LN_EPS = 1e-8
GATES = ("f", "i", "o", "C")


@dataclass
class DrneConfig:
    dim: int = 16
    lam: float = 0.1
    cap: int = NEIGHBOR_CAP
    iterations: int = 100
    mlp_hidden: int = 16
    lr: float = ADAM_LR
    batch_size: int | None = None
    sort: str = "ascending"
    layer_norm: bool = True
    init_scale: float = 0.5
    init_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.sort not in ("ascending", "descending"):
            raise ValueError("sort must be 'ascending' or 'descending'")


@dataclass
class LstmParams:
    """Gate weights ``W_*`` are ``(k, 2k)`` and act on ``[h_prev, x_t]``."""

    W: dict[str, Tensor]
    b: dict[str, Tensor]
    gain: Tensor
    mode: str = "standard"
    layer_norm: bool = True

    @property
    def k(self) -> int:
        return self.gain.shape[0]

    def tensors(self) -> list[Tensor]:
        gain = [self.gain] if self.layer_norm and self.mode == "standard" else []
        return [*self.W.values(), *self.b.values(), *gain]

    @classmethod
    def init(cls, k: int, rng: np.random.Generator, layer_norm: bool = True) -> "LstmParams":
        W = {g: T.parameter(xavier_uniform(rng, 2 * k, k).T, name=f"lstm.W_{g}") for g in GATES}
        b = {g: T.parameter(np.zeros(k), name=f"lstm.b_{g}") for g in GATES}
        return cls(W=W, b=b, gain=T.parameter(np.ones(k), name="lstm.gain"), layer_norm=layer_norm)


def layer_norm(C, g, eps: float = LN_EPS) -> Tensor:
    """Re-centre and re-scale along the last axis, then multiply by the gain ``g``."""
    C = T.tensor(C)
    mu = T.mean(C, axis=-1, keepdims=True)
    centred = C - mu
    var = T.mean(T.square(centred), axis=-1, keepdims=True)
    return g * centred / T.sqrt(var + eps * eps)


def lstm_cell(params: LstmParams, h_prev, c_prev, x_t) -> tuple[Tensor, Tensor]:
    """One transition; rows of ``h_prev``/``x_t`` may be a batch.

    Linear mode replaces every squashing function by the identity and skips
    layer normalisation.
    """
    h_prev, c_prev, x_t = T.tensor(h_prev), T.tensor(c_prev), T.tensor(x_t)
    k = params.k
    for name, t in (("h_prev", h_prev), ("c_prev", c_prev), ("x_t", x_t)):
        if t.shape[-1] != k:
            raise T.ShapeError(f"lstm_cell: {name} has width {t.shape[-1]}, expected {k}")
    z = T.concat([h_prev, x_t], axis=-1)
    pre = {g: T.matmul(z, params.W[g].T) + params.b[g] for g in GATES}
    if params.mode == "linear":
        f, i, o, c_tilde = pre["f"], pre["i"], pre["o"], pre["C"]
        c = f * c_prev + i * c_tilde
        return o * c, c
    f, i, o = T.sigmoid(pre["f"]), T.sigmoid(pre["i"]), T.sigmoid(pre["o"])
    c = f * c_prev + i * T.tanh(pre["C"])
    c_out = layer_norm(c, params.gain) if params.layer_norm else c
    return o * T.tanh(c_out), c


@dataclass
class DrneState:
    X: Tensor
    lstm: LstmParams
    mlp: dict[str, Tensor]
    config: DrneConfig
    degrees: np.ndarray
    neighbors: tuple[np.ndarray, ...]
    history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def theta(self) -> list[Tensor]:
        return [*self.lstm.tensors(), *self.mlp.values()]

    def state(self) -> tuple[dict[str, np.ndarray], dict]:
        arrays = {"X": self.X.data, "lstm.gain": self.lstm.gain.data, "degrees": self.degrees}
        for g in GATES:
            arrays[f"lstm.W_{g}"] = self.lstm.W[g].data
            arrays[f"lstm.b_{g}"] = self.lstm.b[g].data
        arrays.update({k: v.data for k, v in self.mlp.items()})
        nb_flat = np.concatenate(self.neighbors) if self.neighbors else np.zeros(0, dtype=int)
        arrays["nb.flat"] = nb_flat
        arrays["nb.len"] = np.array([len(x) for x in self.neighbors], dtype=int)
        return arrays, {"config": asdict(self.config)}

    @classmethod
    def from_state(cls, arrays: dict, meta: dict) -> "DrneState":
        cfg = DrneConfig(**meta["config"])
        lstm = LstmParams(W={g: T.parameter(arrays[f"lstm.W_{g}"]) for g in GATES},
                          b={g: T.parameter(arrays[f"lstm.b_{g}"]) for g in GATES},
                          gain=T.parameter(arrays["lstm.gain"]), layer_norm=cfg.layer_norm)
        mlp = {k: T.parameter(v, name=k) for k, v in arrays.items() if k.startswith("mlp")}
        bounds = np.cumsum(arrays["nb.len"])[:-1]
        neighbors = tuple(np.split(arrays["nb.flat"].astype(int), bounds))
        return cls(X=T.parameter(arrays["X"], name="X"), lstm=lstm, mlp=mlp, config=cfg,
                   degrees=arrays["degrees"].astype(int), neighbors=neighbors)


def order_neighbors(neighbors, degrees: np.ndarray, descending: bool = False) -> np.ndarray:
    """Sort by degree, ties by node id (ascending in both unless ``descending``)."""
    nb = np.asarray(neighbors, dtype=int)
    d = np.asarray(degrees)[nb]
    key = np.lexsort((nb, -d if descending else d))
    return nb[key]


def neighbor_sequence(state: DrneState, neighbors, rng: np.random.Generator | None) -> np.ndarray:
    cfg = state.config
    nb = np.asarray(neighbors, dtype=int)
    if len(nb) > cfg.cap:
        if rng is None:
            raise ValueError("an rng is needed to down-sample a neighbourhood above the cap")
        nb = degree_biased_sample(nb, cfg.cap, rng, state.degrees)
    return order_neighbors(nb, state.degrees, descending=cfg.sort == "descending")


def run_lstm(params: LstmParams, X, sequences: list[np.ndarray]) -> Tensor:
    """Final hidden state for each sequence of node ids; empty sequences give 0."""
    X = T.tensor(X)
    B, k = len(sequences), params.k
    h = T.tensor(np.zeros((B, k)))
    c = T.tensor(np.zeros((B, k)))
    steps = max((len(s) for s in sequences), default=0)
    for t in range(steps):
        idx = np.array([s[t] if t < len(s) else 0 for s in sequences], dtype=int)
        live = np.array([[1.0] if t < len(s) else [0.0] for s in sequences])
        h_new, c_new = lstm_cell(params, h, c, X[idx])
        if live.all():
            h, c = h_new, c_new
        else:
            h = live * h_new + (1.0 - live) * h
            c = live * c_new + (1.0 - live) * c
    return h


def aggregate(state: DrneState, v: int, rng: np.random.Generator | None = None) -> np.ndarray:
    seq = neighbor_sequence(state, state.neighbors[v], rng)
    return run_lstm(state.lstm, state.X.data, [seq]).numpy()[0]


def mlp_forward(mlp: dict[str, Tensor], h) -> Tensor:
    hidden = T.relu(dense(mlp, "mlp0", h))
    return dense(mlp, "mlp1", hidden).reshape(-1)


def _aggregates(state: DrneState, nodes, rng) -> Tensor:
    seqs = [neighbor_sequence(state, state.neighbors[v], rng) for v in nodes]
    return run_lstm(state.lstm, state.X, seqs)


def loss_recursive(state: DrneState, nodes, rng=None, agg: Tensor | None = None) -> Tensor:
    nodes = np.asarray(nodes, dtype=int)
    agg = _aggregates(state, nodes, rng) if agg is None else agg
    return T.sqnorm(state.X[nodes] - agg)


def loss_regularizer(state: DrneState, nodes, rng=None, agg: Tensor | None = None) -> Tensor:
    nodes = np.asarray(nodes, dtype=int)
    agg = _aggregates(state, nodes, rng) if agg is None else agg
    target = np.log(state.degrees[nodes] + 1.0)
    return T.sqnorm(mlp_forward(state.mlp, agg) - target)


def total_loss(state: DrneState, nodes, rng=None) -> Tensor:
    nodes = np.asarray(nodes, dtype=int)
    agg = _aggregates(state, nodes, rng)
    out = loss_recursive(state, nodes, agg=agg)
    if state.config.lam:
        out = out + state.config.lam * loss_regularizer(state, nodes, agg=agg)
    return out


def init_state(graph: Graph, config: DrneConfig, rng: np.random.Generator) -> DrneState:
    k = config.dim
    # every node starts from one shared random row (plus optional jitter), so
    # only graph structure can pull equivalent nodes apart
    shared = rng.uniform(-config.init_scale, config.init_scale, size=k)
    X0 = np.tile(shared, (graph.n, 1)) + rng.normal(0.0, config.init_jitter, size=(graph.n, k))
    X = T.parameter(X0, name="X")
    lstm = LstmParams.init(k, rng, layer_norm=config.layer_norm)
    mlp = {**dense_params(rng, k, config.mlp_hidden, "mlp0"), **dense_params(rng, config.mlp_hidden, 1, "mlp1")}
    return DrneState(X=X, lstm=lstm, mlp=mlp, config=config,
                     degrees=graph.degrees.copy(), neighbors=graph.neighbors)


def train(graph: Graph, config: DrneConfig) -> DrneState:
    """Alternate embedding and aggregator updates, one Adam group each."""
    rng = np.random.default_rng(config.seed)
    state = init_state(graph, config, rng)
    opt_x = Optimizer([state.X], kind="adam", lr=config.lr)
    opt_theta = Optimizer(state.theta(), kind="adam", lr=config.lr)
    n = graph.n
    bs = n if not config.batch_size else min(config.batch_size, n)
    for it in range(config.iterations):
        order = rng.permutation(n) if bs < n else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            nodes = np.sort(order[start:start + bs])
            sample_seed = int(rng.integers(2**63))
            try:
                opt_x.zero_grad()
                loss = total_loss(state, nodes, np.random.default_rng(sample_seed))
                total += loss.item()
                loss.backward()
                opt_x.step()
                opt_theta.zero_grad()
                loss = total_loss(state, nodes, np.random.default_rng(sample_seed))
                grads = loss.backward()
                opt_theta.step(grads)
            except NumericalError as exc:
                raise DivergenceError("drne", it, str(exc)) from exc
        if not np.isfinite(total):
            raise DivergenceError("drne", it, "loss is not finite")
        state.history.append(total)
    return state


def embed_new_node(state: DrneState, neighbor_ids, rng: np.random.Generator | None = None) -> np.ndarray:
    """Aggregate the trained embeddings of the given neighbours (cost O(d_v k))."""
    nb = np.unique(np.asarray(neighbor_ids, dtype=int))
    if len(nb) == 0:
        raise DisconnectedNodeError("a new node needs at least one neighbour to aggregate")
    if nb.min() < 0 or nb.max() >= state.X.shape[0]:
        raise KeyError(f"neighbour ids must lie in [0, {state.X.shape[0]})")
    seq = neighbor_sequence(state, nb, rng)
    return run_lstm(state.lstm, state.X.data, [seq]).numpy()[0]


# -- constructive centrality fixed points ---------------------------------------

def _linear_params(rows: dict[str, np.ndarray], bias: dict[str, np.ndarray]) -> LstmParams:
    W = {g: T.Tensor(rows[g]) for g in GATES}
    b = {g: T.Tensor(bias[g]) for g in GATES}
    return LstmParams(W=W, b=b, gain=T.Tensor(np.ones(2)), mode="linear", layer_norm=False)


def centrality_table(kind: str, graph: Graph) -> np.ndarray:
    """Per-node ``[F(v), C(v)]`` with ``C(v) = sum_{u in N(v)} F(u) C(u)``."""
    d = graph.degrees.astype(np.float64)
    if np.any(d == 0):
        raise ValueError("centrality fixed points need a graph without isolated nodes")
    if kind == "degree":
        return np.column_stack([1.0 / d, d])
    if kind == "pagerank":
        return np.column_stack([1.0 / d, d / d.sum()])
    if kind == "eigenvector":
        A = adjacency(graph)
        if graph.components() != 1:
            raise ValueError("eigenvector centrality needs a connected graph")
        vals, vecs = np.linalg.eigh(A)
        lam, c = vals[-1], vecs[:, -1]
        c = np.abs(c) / np.linalg.norm(c)
        return np.column_stack([np.full(graph.n, 1.0 / lam), c])
    raise ValueError(f"unsupported centrality {kind!r}; expected degree, eigenvector or pagerank")


def construct_centrality_weights(kind: str, graph: Graph) -> tuple[LstmParams, np.ndarray]:
    """Linear-mode LSTM weights under which ``[F, C]`` is a fixed point of aggregation.

    Coordinate 2 accumulates ``sum F(u) C(u)``: forget and output gates are
    constant 1, the input gate reads ``F(u)`` and the candidate reads ``C(u)``.
    Coordinate 1 copies the latest ``F(u)``, which reproduces ``F(v)`` exactly
    when F is constant (eigenvector); for degree and PageRank only coordinate
    2 is a fixed point of this construction.
    """
    table = centrality_table(kind, graph)
    z = np.zeros(4)
    rows = {
        "f": np.array([z, z]),
        "i": np.array([z, [0, 0, 1, 0]], dtype=float),
        "o": np.array([z, z]),
        "C": np.array([[0, 0, 1, 0], [0, 0, 0, 1]], dtype=float),
    }
    bias = {"f": np.array([0.0, 1.0]), "i": np.array([1.0, 0.0]),
            "o": np.array([1.0, 1.0]), "C": np.array([0.0, 0.0])}
    return _linear_params(rows, bias), table


def linear_aggregate(params: LstmParams, table: np.ndarray, graph: Graph) -> np.ndarray:
    """Run the (linear-mode) LSTM over every node's degree-sorted neighbours."""
    seqs = [order_neighbors(graph.neighbors[v], graph.degrees) for v in range(graph.n)]
    return run_lstm(params, table, seqs).numpy()
