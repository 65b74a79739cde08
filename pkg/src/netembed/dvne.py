"""Deep variational network embedding.

Nodes map to diagonal Gaussians.  Triplets (anchor, neighbour, non-neighbour)
are ranked by the 2-Wasserstein distance between their Gaussians, and a
decoder fed a reparameterised sample must recover the non-zero entries of the
node's transition row.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .errors import DivergenceError
from .graph import Graph, adjacency, transition
from .nn import dense, dense_params
from .optim import Optimizer
from .tensor import NumericalError, Tensor

log = logging.getLogger(__name__)

# keeps d/dx sqrt(x) finite when two Gaussians coincide
ENERGY_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianEmbedding:
    mu: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        if mu.shape != var.shape:
            raise ValueError(f"mean shape {mu.shape} and variance shape {var.shape} differ")
        if np.any(var <= 0):
            raise ValueError("variances must be strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "var", var)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)


def w2_distance(h1: GaussianEmbedding, h2: GaussianEmbedding) -> float:
    """2-Wasserstein distance between diagonal Gaussians."""
    if h1.mu.shape != h2.mu.shape:
        raise ValueError(f"dimension mismatch: {h1.mu.shape} vs {h2.mu.shape}")
    sq = np.sum((h1.mu - h2.mu) ** 2) + np.sum((h1.std - h2.std) ** 2)
    return float(np.sqrt(sq))


def w2_squared(mu_a, std_a, mu_b, std_b) -> Tensor:
    """Row-wise squared W2 between batches of diagonal Gaussians given by std."""
    dm = T.tensor(mu_a) - mu_b
    ds = T.tensor(std_a) - std_b
    return T.tsum(T.square(dm) + T.square(ds), axis=-1)


@dataclass
class DvneConfig:
    dim: int = 16
    hidden: int = 64
    alpha: float = 1.0
    epochs: int = 50
    triplets: int | None = None
    batch_size: int = 64
    lr: float = 0.01
    optimizer: str = "rmsprop"
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.dim < 1 or self.hidden < 1:
            raise ValueError("dim and hidden must be positive")


@dataclass
class DvneModel:
    params: dict[str, Tensor]
    config: DvneConfig
    history: list[float] = field(default_factory=list)

    @classmethod
    def init(cls, n: int, config: DvneConfig, rng: np.random.Generator) -> "DvneModel":
        p: dict[str, Tensor] = {}
        p.update(dense_params(rng, n, config.hidden, "trunk"))
        p.update(dense_params(rng, config.hidden, config.dim, "mu"))
        p.update(dense_params(rng, config.hidden, config.dim, "sigma"))
        p.update(dense_params(rng, config.dim, config.hidden, "dec0"))
        p.update(dense_params(rng, config.hidden, n, "dec1"))
        return cls(params=p, config=config)

    def state(self) -> tuple[dict[str, np.ndarray], dict]:
        return {k: v.data for k, v in self.params.items()}, {"config": asdict(self.config)}

    @classmethod
    def from_state(cls, arrays: dict, meta: dict) -> "DvneModel":
        return cls(params={k: T.parameter(v, name=k) for k, v in arrays.items()},
                   config=DvneConfig(**meta["config"]))


def encode(model: DvneModel, rows) -> tuple[Tensor, Tensor]:
    """Mean and standard deviation (ELU + 1, hence positive) for each row."""
    trunk = T.relu(dense(model.params, "trunk", rows))
    mu = dense(model.params, "mu", trunk)
    std = T.elu(dense(model.params, "sigma", trunk)) + 1.0
    return mu, std


def encode_gaussian(model: DvneModel, row) -> GaussianEmbedding:
    mu, std = encode(model, np.asarray(row, dtype=np.float64)[None, :])
    return GaussianEmbedding(mu.numpy()[0], std.numpy()[0] ** 2)


def reparameterize(mu, std, eps) -> Tensor:
    return T.tensor(mu) + T.tensor(std) * np.asarray(eps, dtype=np.float64)


def decode(model: DvneModel, z) -> Tensor:
    return T.sigmoid(dense(model.params, "dec1", T.relu(dense(model.params, "dec0", z))))


def _check_triplets(triplets: np.ndarray, S: np.ndarray) -> None:
    i, j, k = triplets.T
    bad = (S[i, j] <= 0) | (S[i, k] > 0) | (i == k) | (i == j)
    if bad.any():
        raise ValueError(f"invalid triplet {tuple(int(x) for x in triplets[np.argmax(bad)])}: "
                         "need j a neighbour and k a non-neighbour of i")


def ranking_terms(mu, std, triplets) -> Tensor:
    """Per-triplet energy ``E_ij^2 + exp(-E_ik)``."""
    triplets = np.asarray(triplets, dtype=int).reshape(-1, 3)
    mu, std = T.tensor(mu), T.tensor(std)
    i, j, k = triplets.T
    e_ij = w2_squared(mu[i], std[i], mu[j], std[j])
    e_ik = T.sqrt(w2_squared(mu[i], std[i], mu[k], std[k]) + ENERGY_FLOOR)
    return e_ij + T.exp(-e_ik)


def loss_ranking(triplets, mu, std, S: np.ndarray | None = None) -> Tensor:
    """Summed ranking energy; triplet membership is checked when ``S`` is given."""
    triplets = np.asarray(triplets, dtype=int).reshape(-1, 3)
    if S is not None:
        _check_triplets(triplets, np.asarray(S))
    return T.tsum(ranking_terms(mu, std, triplets))


def loss_reconstruction(rows, recon) -> Tensor:
    """Squared error weighted by the row itself, so zero entries drop out."""
    rows = np.asarray(rows, dtype=np.float64)
    return T.sqnorm(rows * (rows - T.tensor(recon)))


def sample_triplets(graph: Graph, M: int, rng: np.random.Generator, S: np.ndarray | None = None) -> np.ndarray:
    """``M`` triplets drawn uniformly from all valid (i, j, k); anchors without a
    neighbour or a non-neighbour are skipped."""
    S = adjacency(graph) if S is None else S
    linked = S > 0
    non_nb = graph.n - 1 - linked.sum(axis=1)
    pairs = np.argwhere(linked)
    weights = non_nb[pairs[:, 0]].astype(np.float64)
    if weights.sum() == 0:
        raise ValueError("no anchor has both a neighbour and a non-neighbour")
    picks = pairs[rng.choice(len(pairs), size=M, p=weights / weights.sum())]
    out = np.empty((M, 3), dtype=int)
    out[:, :2] = picks
    for r, (i, _) in enumerate(picks):
        cand = np.flatnonzero(~linked[i])
        cand = cand[cand != i]
        out[r, 2] = cand[rng.integers(len(cand))]
    return out


def batch_loss(model: DvneModel, P: np.ndarray, triplets: np.ndarray, eps: np.ndarray) -> Tensor:
    """Mean ranking energy plus ``alpha`` times the mean masked reconstruction
    error of the distinct nodes the triplets touch (``eps`` is one noise row
    per distinct node, in sorted-node order)."""
    nodes, inv = np.unique(triplets, return_inverse=True)
    local = inv.reshape(triplets.shape)
    rows = P[nodes]
    mu, std = encode(model, rows)
    loss = T.tsum(ranking_terms(mu, std, local)) / len(triplets)
    if model.config.alpha:
        z = reparameterize(mu, std, eps)
        loss = loss + model.config.alpha * loss_reconstruction(rows, decode(model, z)) / len(nodes)
    return loss


def embed(model: DvneModel, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu, std = encode(model, P)
    return mu.numpy(), std.numpy()


def train(graph: Graph, config: DvneConfig) -> tuple[DvneModel, np.ndarray, np.ndarray]:
    """Returns the model with per-node means and standard deviations."""
    rng = np.random.default_rng(config.seed)
    S, P = adjacency(graph), transition(graph)
    model = DvneModel.init(graph.n, config, rng)
    trainable = [p for k, p in model.params.items() if config.alpha or not k.startswith("dec")]
    opt = Optimizer(trainable, kind=config.optimizer, lr=config.lr)
    M = config.triplets or max(2 * graph.m, 1)
    for epoch in range(config.epochs):
        triplets = sample_triplets(graph, M, rng, S)
        total = 0.0
        for start in range(0, M, config.batch_size):
            batch = triplets[start:start + config.batch_size]
            eps = rng.standard_normal((len(np.unique(batch)), config.dim))
            try:
                opt.zero_grad()
                loss = batch_loss(model, P, batch, eps)
                total += loss.item() * len(batch)
                opt.step(loss.backward())
            except NumericalError as exc:
                raise DivergenceError("dvne", epoch, str(exc)) from exc
        model.history.append(total / M)
    mu, std = embed(model, P)
    return model, mu, std
