"""Structural deep network embedding.

A deep sigmoid autoencoder reconstructs each node's adjacency row, with
reconstruction errors on observed links weighted by ``beta``, while a
Laplacian penalty pulls the codes of linked nodes together.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .errors import DisconnectedNodeError, DivergenceError
from .graph import Graph, adjacency
from .nn import dense, dense_params
from .optim import Optimizer
from .tensor import NumericalError, Tensor

log = logging.getLogger(__name__)


@dataclass
class SdneConfig:
    hidden: tuple[int, ...] = (64,)
    dim: int = 16
    alpha: float = 0.05
    nu: float = 1e-4
    beta: float = 5.0
    epochs: int = 200
    batch_size: int | None = None
    lr: float = 0.01
    optimizer: str = "adam"
    tol: float = 1e-5
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.beta <= 1:
            raise ValueError("beta must exceed 1")
        if self.alpha < 0 or self.nu < 0:
            raise ValueError("alpha and nu must be non-negative")


@dataclass
class SdneModel:
    layer_sizes: list[int]
    params: dict[str, Tensor]
    config: SdneConfig
    history: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    @classmethod
    def init(cls, n: int, config: SdneConfig, rng: np.random.Generator) -> "SdneModel":
        sizes = [n, *config.hidden, config.dim]
        params: dict[str, Tensor] = {}
        for k in range(len(sizes) - 1):
            params.update(dense_params(rng, sizes[k], sizes[k + 1], f"enc{k}"))
        for k in range(len(sizes) - 1, 0, -1):
            params.update(dense_params(rng, sizes[k], sizes[k - 1], f"dec{k - 1}"))
        return cls(layer_sizes=sizes, params=params, config=config)

    @property
    def depth(self) -> int:
        return len(self.layer_sizes) - 1

    def weights(self) -> list[Tensor]:
        return [p for name, p in self.params.items() if name.endswith(".W")]

    def state(self) -> tuple[dict[str, np.ndarray], dict]:
        arrays = {k: v.data for k, v in self.params.items()}
        meta = {"layer_sizes": self.layer_sizes, "config": asdict(self.config)}
        return arrays, meta

    @classmethod
    def from_state(cls, arrays: dict[str, np.ndarray], meta: dict) -> "SdneModel":
        params = {k: T.parameter(v, name=k) for k, v in arrays.items() if k.startswith(("enc", "dec"))}
        return cls(layer_sizes=list(meta["layer_sizes"]), params=params, config=SdneConfig(**meta["config"]))


def encode(model: SdneModel, x) -> Tensor:
    """Sigmoid encoder stack; ``x`` is one row or a batch of rows of length n."""
    x = T.tensor(x)
    if x.shape[-1] != model.layer_sizes[0]:
        raise T.ShapeError(f"encode: input width {x.shape[-1]} != {model.layer_sizes[0]}")
    h = x
    for k in range(model.depth):
        h = T.sigmoid(dense(model.params, f"enc{k}", h))
    return h


def decode(model: SdneModel, y) -> Tensor:
    y = T.tensor(y)
    if y.shape[-1] != model.layer_sizes[-1]:
        raise T.ShapeError(f"decode: code width {y.shape[-1]} != {model.layer_sizes[-1]}")
    h = y
    for k in range(model.depth - 1, -1, -1):
        h = T.sigmoid(dense(model.params, f"dec{k}", h))
    return h


def penalty_mask(X: np.ndarray, beta: float) -> np.ndarray:
    return np.where(np.asarray(X) > 0, beta, 1.0)


def loss_second_order(X, X_hat, beta: float) -> Tensor:
    """``||(X_hat - X) * B||_F^2`` with B = beta on observed links, 1 elsewhere."""
    X = T.tensor(X)
    B = penalty_mask(X.data, beta)
    return T.sqnorm((X_hat - X) * B)


def loss_first_order(S, Y) -> Tensor:
    """``sum_ij s_ij ||y_i - y_j||^2`` evaluated as ``2 tr(Y^T L Y)``."""
    S = np.asarray(S.data if isinstance(S, Tensor) else S, dtype=np.float64)
    L = np.diag(S.sum(axis=1)) - S
    Y = T.tensor(Y)
    return 2.0 * T.tsum(Y * T.matmul(L, Y))


def loss_reg(model: SdneModel) -> Tensor:
    total = T.tensor(0.0)
    for W in model.weights():
        total = total + T.sqnorm(W)
    return 0.5 * total


def loss_mix(model: SdneModel, S_rows, S_block, Y, X_hat) -> Tensor:
    """Weighted sum of the second-order, first-order and weight-decay terms.

    ``S_rows`` are the input adjacency rows of the batch, ``S_block`` the
    batch-internal adjacency used by the first-order term.
    """
    cfg = model.config
    out = loss_second_order(S_rows, X_hat, cfg.beta)
    if cfg.alpha:
        out = out + cfg.alpha * loss_first_order(S_block, Y)
    if cfg.nu:
        out = out + cfg.nu * loss_reg(model)
    return out


def batch_loss(model: SdneModel, S: np.ndarray, idx: np.ndarray) -> Tensor:
    rows = S[idx]
    Y = encode(model, rows)
    X_hat = decode(model, Y)
    return loss_mix(model, rows, S[np.ix_(idx, idx)], Y, X_hat)


def _converged(history: list[float], tol: float, patience: int) -> bool:
    if len(history) <= patience:
        return False
    old, new = history[-patience - 1], history[-1]
    return abs(old - new) / max(abs(old), 1e-12) < tol


def train(graph: Graph, config: SdneConfig) -> tuple[SdneModel, np.ndarray]:
    """Fit on ``X = S`` and return the model with one embedding row per node."""
    rng = np.random.default_rng(config.seed)
    S = adjacency(graph)
    n = graph.n
    model = SdneModel.init(n, config, rng)
    opt = Optimizer(list(model.params.values()), kind=config.optimizer, lr=config.lr)
    bs = n if not config.batch_size else min(config.batch_size, n)
    everyone = np.arange(n)
    model.initial_loss = batch_loss(model, S, everyone).item()
    for epoch in range(config.epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = np.sort(order[start:start + bs])
            opt.zero_grad()
            try:
                loss = batch_loss(model, S, idx)
                val = loss.item()
                if not np.isfinite(val):
                    raise NumericalError("loss is not finite")
                grads = loss.backward()
            except NumericalError as exc:
                raise DivergenceError("sdne", epoch, str(exc)) from exc
            opt.step(grads)
            total += val
        model.history.append(total)
        if _converged(model.history, config.tol, config.patience):
            log.info("sdne converged after %d epochs", epoch + 1)
            break
    model.final_loss = batch_loss(model, S, everyone).item()
    return model, embed(model, S)


def embed(model: SdneModel, S: np.ndarray) -> np.ndarray:
    return encode(model, S).numpy()


def embed_new_vertex(model: SdneModel, row) -> np.ndarray:
    """Encode the adjacency row of an unseen vertex against the trained nodes."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (model.layer_sizes[0],):
        raise T.ShapeError(f"adjacency row must have length {model.layer_sizes[0]}, got {row.shape}")
    if not np.any(row > 0):
        raise DisconnectedNodeError(
            "cannot embed a vertex with no connections to existing vertices: "
            "its adjacency row is all zeros")
    return encode(model, row).numpy()
