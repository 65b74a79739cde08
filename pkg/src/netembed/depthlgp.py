"""Out-of-sample embedding inference with a high-order Laplacian Gaussian process.

Every latent dimension k carries a Gaussian-process prior whose precision is
``I + eta_k L(A_hat) + zeta_k L(A_hat A_hat)``, with ``A_hat = diag(a) A diag(a)``
and ``L(X) = diag(column sums of X) - X``.  New nodes receive the conditional
mean of their latents given the old nodes' latents, which then passes through
a residual network ``g(x) = x + g_tilde(x)`` to give an embedding.

Parameters are fit by empirical risk minimisation: random-walk node sets are
hidden inside small sampled subgraphs and their embeddings are predicted back.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import DivergenceError
from .graph import Graph, GraphFormatError, adjacency, laplacian
from .nn import dense, dense_params
from .optim import Optimizer
from .tensor import NumericalError, Tensor

log = logging.getLogger(__name__)

PRIOR_HOPS = 2


@dataclass
class DepthLgpConfig:
    hidden: int = 32
    eta: float = 1.0
    zeta: float = 0.1
    share_weights: bool = False
    share_kernel: bool = False
    walk_length: int = 3
    context_cap: int = 30
    steps: int = 400
    lr: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0 or self.zeta < 0:
            raise ValueError("eta and zeta must be non-negative")
        if self.walk_length < 1 or self.context_cap < 1:
            raise ValueError("walk_length and context_cap must be positive")


@dataclass(frozen=True)
class HlgpKernelParams:
    """``eta``/``zeta`` have shape (s,) or (1,); ``a`` has shape (s, n) or (1, n)."""

    eta: np.ndarray
    zeta: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.eta) < 0) or np.any(np.asarray(self.zeta) < 0):
            raise ValueError("eta and zeta must be non-negative")
        a = np.asarray(self.a)
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError("node weights must lie in [0, 1]")


@dataclass
class DepthLgpModel:
    """Trained latent table ``h`` (n, s), kernel parameters and residual network."""

    params: dict[str, Tensor]
    config: DepthLgpConfig
    history: list[float] = field(default_factory=list)

    @classmethod
    def init(cls, f: np.ndarray, config: DepthLgpConfig, rng: np.random.Generator) -> "DepthLgpModel":
        n, d = f.shape
        s_k = 1 if config.share_kernel else d
        s_a = 1 if config.share_weights else d
        p = {
            "h": T.parameter(f, name="h"),
            "eta": T.parameter(np.full(s_k, config.eta), name="eta"),
            "zeta": T.parameter(np.full(s_k, config.zeta), name="zeta"),
            "a": T.parameter(np.ones((s_a, n)), name="a"),
        }
        p.update(dense_params(rng, d, config.hidden, "g0"))
        out = dense_params(rng, config.hidden, d, "g1")
        out["g1.W"].data[:] = 0.0  # g starts as the identity
        p.update(out)
        return cls(params=p, config=config)

    @property
    def latents(self) -> np.ndarray:
        return self.params["h"].data

    @property
    def kernel(self) -> HlgpKernelParams:
        p = self.params
        return HlgpKernelParams(p["eta"].data.copy(), p["zeta"].data.copy(), p["a"].data.copy())

    def gparams(self) -> dict[str, Tensor]:
        return {k: v for k, v in self.params.items() if k.startswith("g")}

    def clamp(self) -> None:
        for name in ("eta", "zeta"):
            np.maximum(self.params[name].data, 0.0, out=self.params[name].data)
        np.clip(self.params["a"].data, 0.0, 1.0, out=self.params["a"].data)

    def state(self) -> tuple[dict[str, np.ndarray], dict]:
        return {k: v.data for k, v in self.params.items()}, {"config": asdict(self.config)}

    @classmethod
    def from_state(cls, arrays: dict, meta: dict) -> "DepthLgpModel":
        return cls(params={k: T.parameter(v, name=k) for k, v in arrays.items()},
                   config=DepthLgpConfig(**meta["config"]))


# -- kernel algebra ---------------------------------------------------------------

def kernel_precision(A, eta: float, zeta: float, a=None) -> np.ndarray:
    """Precision ``M = K^{-1}`` for one latent dimension (no inversion needed)."""
    if eta < 0 or zeta < 0:
        raise ValueError(f"eta and zeta must be non-negative, got {eta}, {zeta}")
    A = np.asarray(A, dtype=np.float64)
    a = np.ones(len(A)) if a is None else np.asarray(a, dtype=np.float64)
    A_hat = a[:, None] * A * a[None, :]
    return np.eye(len(A)) + eta * laplacian(A_hat) + zeta * laplacian(A_hat @ A_hat)


def _laplacian_t(X: Tensor) -> Tensor:
    n = X.shape[-1]
    return T.tsum(X, axis=-2)[..., None] * np.eye(n) - X


def kernel_precision_tensor(A: np.ndarray, eta: Tensor, zeta: Tensor, a: Tensor) -> Tensor:
    """Batched precision, one matrix per row of ``a`` / entry of ``eta``."""
    A_hat = a[:, :, None] * A * a[:, None, :]
    n = A.shape[0]
    return (np.eye(n) + eta[:, None, None] * _laplacian_t(A_hat)
            + zeta[:, None, None] * _laplacian_t(T.matmul(A_hat, A_hat)))


def predict_latent(M, z_x) -> np.ndarray:
    """Conditional mean of the last ``m`` latents given the first ``n``
    (``z_x`` is ``(n,)`` or ``(n, c)``)."""
    M = np.asarray(M, dtype=np.float64)
    z_x = np.asarray(z_x, dtype=np.float64)
    n = z_x.shape[0]
    if n >= M.shape[0]:
        raise ValueError("M must contain at least one new node after the n old ones")
    try:
        return -np.linalg.solve(M[n:, n:], M[n:, :n] @ z_x)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"new-node block of M is singular: {exc}") from None


def criterion_value(A, eta: float, zeta: float, a, z) -> float:
    """``sum z^2 + eta/2 sum_uv a_u A_uv a_v (z_u - z_v)^2
    + zeta/2 sum_uvw a_u A_uw a_w a_w A_wv a_v (z_u - z_v)^2``."""
    A = np.asarray(A, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    A_hat = a[:, None] * A * a[None, :]
    D = (z[:, None] - z[None, :]) ** 2
    first = np.einsum("uv,uv->", A_hat, D)
    second = np.einsum("uw,wv,uv->", A_hat, A_hat, D)
    return float(np.sum(z**2) + 0.5 * eta * first + 0.5 * zeta * second)


def transform(gparams: dict, h) -> Tensor:
    """Residual map ``h + g_tilde(h)``."""
    h = T.tensor(h)
    return h + dense(gparams, "g1", T.relu(dense(gparams, "g0", h)))


# -- prediction -------------------------------------------------------------------

def _subgraph_latents(model: DepthLgpModel, A_sub: np.ndarray, old: np.ndarray, m: int) -> np.ndarray:
    """Latents for the last ``m`` rows of ``A_sub`` whose first rows are ``old``."""
    p = model.params
    h = p["h"].data[old]  # (n_old, s)
    a_old = p["a"].data[:, old]
    a = np.hstack([a_old, np.ones((a_old.shape[0], m))])
    s = h.shape[1]
    out = np.zeros((m, s))
    for k in range(s):
        ak = a[k if a.shape[0] > 1 else 0]
        e = p["eta"].data[k if p["eta"].shape[0] > 1 else 0]
        zt = p["zeta"].data[k if p["zeta"].shape[0] > 1 else 0]
        M = kernel_precision(A_sub, e, zt, ak)
        out[:, k] = predict_latent(M, h[:, k])
    return out


def _region(g_prime: Graph, new_nodes: np.ndarray, n_old: int) -> np.ndarray:
    dist = g_prime.hop_distances(new_nodes, limit=PRIOR_HOPS)
    return np.array(sorted(v for v in dist if v < n_old), dtype=int)


def predict_group(model: DepthLgpModel, g_prime: Graph, new_nodes, n_old: int | None = None) -> np.ndarray:
    """Embeddings for ``new_nodes`` (ids >= n_old in ``g_prime``), solved jointly.

    Only old nodes within two hops of the group enter the computation; every
    other entry of the precision rows for the new nodes is zero, so the result
    equals the full-graph conditional while costing time linear in the graph.
    """
    n_old = model.latents.shape[0] if n_old is None else n_old
    new_nodes = np.asarray(new_nodes, dtype=int)
    if len(new_nodes) == 0:
        return np.zeros((0, model.latents.shape[1]))
    if new_nodes.min() < n_old:
        raise ValueError("new node ids must follow the trained nodes")
    for v in new_nodes:
        if len(g_prime.neighbors[v]) == 0:
            warnings.warn(f"new node {g_prime.labels[v]} has no edges; using the prior mean latent", stacklevel=2)
    old = _region(g_prime, new_nodes, n_old)
    sub = g_prime.induced(np.r_[old, new_nodes])
    z = _subgraph_latents(model, adjacency(sub), old, len(new_nodes))
    return transform(model.gparams(), z).numpy()


def new_node_groups(g_prime: Graph, n_old: int) -> list[np.ndarray]:
    """Partition new nodes so that nodes sharing an edge or a common neighbour
    land together; distinct groups have no precision coupling."""
    new = list(range(n_old, g_prime.n))
    parent = {v: v for v in new}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(u, v):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)

    for v in new:
        for u in g_prime.neighbors[v]:
            u = int(u)
            if u >= n_old:
                union(v, u)
            for w in g_prime.neighbors[u]:
                if int(w) >= n_old and int(w) != v:
                    union(v, int(w))
    groups: dict[int, list[int]] = {}
    for v in new:
        groups.setdefault(find(v), []).append(v)
    return [np.array(sorted(x), dtype=int) for _, x in sorted(groups.items())]


def predict_embeddings(model: DepthLgpModel, g_prime: Graph, batched: bool = False) -> np.ndarray:
    """Embeddings for every node of ``g_prime`` beyond the trained ones.

    ``batched`` solves coupled groups separately; it returns the same values as
    the single joint solve.
    """
    n_old = model.latents.shape[0]
    new = np.arange(n_old, g_prime.n)
    if not batched:
        return predict_group(model, g_prime, new, n_old)
    out = np.zeros((len(new), model.latents.shape[1]))
    for grp in new_node_groups(g_prime, n_old):
        out[grp - n_old] = predict_group(model, g_prime, grp, n_old)
    return out


# -- training ---------------------------------------------------------------------

def sample_training_subgraph(graph: Graph, rng: np.random.Generator, walk_length: int = 3,
                             cap: int = 30) -> tuple[np.ndarray, np.ndarray, Graph]:
    """Hidden nodes from one random walk, context nodes from their two-hop
    neighbourhood; the induced subgraph lists context nodes first."""
    v = int(rng.integers(graph.n))
    walk = [v]
    for _ in range(walk_length - 1):
        nb = graph.neighbors[v]
        if len(nb) == 0:
            break
        v = int(nb[rng.integers(len(nb))])
        walk.append(v)
    hidden = np.array(list(dict.fromkeys(walk)), dtype=int)
    dist = graph.hop_distances(hidden, limit=PRIOR_HOPS)
    pool = np.array(sorted(u for u in dist if dist[u] > 0), dtype=int)
    if len(pool) > cap:
        pool = np.sort(rng.choice(pool, size=cap, replace=False))
    return hidden, pool, graph.induced(np.r_[pool, hidden])


def erm_loss(model: DepthLgpModel, f: np.ndarray, hidden: np.ndarray, context: np.ndarray,
             A_sub: np.ndarray) -> Tensor:
    """Mean squared error of predicting ``f`` on ``hidden`` from ``context``."""
    p = model.params
    n_c, m = len(context), len(hidden)
    a = T.concat([p["a"][:, context], np.ones((p["a"].shape[0], m))], axis=1)
    M = kernel_precision_tensor(A_sub, p["eta"], p["zeta"], a)
    z_x = p["h"][context].T
    z_x = z_x.reshape(z_x.shape[0], n_c, 1)
    rhs = T.matmul(M[:, n_c:, :n_c], z_x)
    z = -T.solve(M[:, n_c:, n_c:], rhs)  # (s, m, 1)
    f_tilde = transform(model.gparams(), z.reshape(z.shape[0], m).T)
    return T.sqnorm(f_tilde - f[hidden]) / m


def train(graph: Graph, f: np.ndarray, config: DepthLgpConfig) -> DepthLgpModel:
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != graph.n:
        raise ValueError(f"{f.shape[0]} embedding rows for {graph.n} nodes")
    rng = np.random.default_rng(config.seed)
    model = DepthLgpModel.init(f, config, rng)
    opt = Optimizer(list(model.params.values()), kind="adam", lr=config.lr)
    for step in range(config.steps):
        for _ in range(100):
            hidden, context, sub = sample_training_subgraph(graph, rng, config.walk_length, config.context_cap)
            if len(context):
                break
        else:
            raise ValueError("could not sample a subgraph with context nodes; is the graph edgeless?")
        try:
            opt.zero_grad()
            loss = erm_loss(model, f, hidden, context, adjacency(sub))
            model.history.append(loss.item())
            opt.step(loss.backward())
        except NumericalError as exc:
            raise DivergenceError("depthlgp", step, str(exc)) from exc
        model.clamp()
    return model


# -- evolved graphs -----------------------------------------------------------------

def parse_delta(path: str | Path, graph: Graph) -> Graph:
    """Apply ``+node id`` / ``+edge u v [w]`` lines; new nodes get ids after the old ones."""
    labels = list(graph.labels)
    index = {lab: i for i, lab in enumerate(labels)}
    edges = [(u, v, w) for u, v, w in graph.edges]
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            op, args = parts[0], parts[1:]
            if op == "+node" and len(args) == 1:
                if args[0] in index:
                    raise GraphFormatError(f"node {args[0]!r} already exists", lineno)
                index[args[0]] = len(labels)
                labels.append(args[0])
            elif op == "+edge" and len(args) in (2, 3):
                try:
                    u, v = index[args[0]], index[args[1]]
                except KeyError as exc:
                    raise GraphFormatError(f"edge references unknown node {exc.args[0]!r}", lineno) from None
                try:
                    w = float(args[2]) if len(args) == 3 else 1.0
                except ValueError:
                    raise GraphFormatError(f"bad weight {args[2]!r}", lineno) from None
                if w < 0 or u == v:
                    raise GraphFormatError("edge weights must be non-negative and endpoints distinct", lineno)
                edges.append((u, v, w))
            else:
                raise GraphFormatError(f"expected '+node id' or '+edge u v [w]', got {raw.strip()!r}", lineno)
    return Graph.from_edges(len(labels), edges, labels=labels)
