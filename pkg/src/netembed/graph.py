"""Graph and hypergraph containers, their derived matrices, and file loaders.

Node ids are dense integers ``0..n-1``.  The original labels read from a file
are kept alongside in ``labels``.  Matrices are dense numpy arrays.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed graph input; carries the offending line number when known."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _sorted_labels(labels: Iterable[str]) -> list[str]:
    labels = set(labels)
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph; ``edges`` holds each pair once with ``u < v``."""

    n: int
    edges: tuple[tuple[int, int, float], ...]
    labels: tuple[str, ...] = ()
    directed: bool = False

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))
        if len(self.labels) != self.n:
            raise ValueError(f"{len(self.labels)} labels for {self.n} nodes")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], labels: Sequence[str] = (),
                   allow_self_loops: bool = False) -> "Graph":
        """Validate and canonicalise ``(u, v[, w])`` triples; duplicates add up."""
        merged: dict[tuple[int, int], float] = {}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside node range [0, {n})")
            if w < 0 or not np.isfinite(w):
                raise ValueError(f"edge ({u}, {v}) has invalid weight {w}")
            if u == v and not allow_self_loops:
                raise ValueError(f"self-loop on node {u}")
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0.0) + w
        canon = tuple((u, v, w) for (u, v), w in sorted(merged.items()))
        return cls(n=n, edges=canon, labels=tuple(labels))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, ...]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            if w > 0:
                nb[u].append(v)
                if u != v:
                    nb[v].append(u)
        return tuple(np.array(sorted(x), dtype=int) for x in nb)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Neighbour counts ``d_v``."""
        return np.array([len(x) for x in self.neighbors], dtype=int)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def components(self) -> int:
        if self.n == 0:
            return 0
        return int(connected_components(csr_matrix(adjacency(self)), directed=False)[0])

    def summary(self) -> dict:
        return {"nodes": self.n, "edges": self.m, "components": self.components()}

    def induced(self, nodes: Sequence[int]) -> "Graph":
        """Subgraph on ``nodes``; new id ``i`` is ``nodes[i]``."""
        pos = {int(v): i for i, v in enumerate(nodes)}
        sub = [(pos[u], pos[v], w) for u, v, w in self.edges if u in pos and v in pos]
        return Graph.from_edges(len(nodes), sub, labels=[self.labels[int(v)] for v in nodes])

    def hop_distances(self, sources: Iterable[int], limit: int | None = None) -> dict[int, int]:
        """Breadth-first hop counts from a set of sources, optionally truncated."""
        dist = {int(s): 0 for s in sources}
        queue = deque(dist)
        while queue:
            u = queue.popleft()
            if limit is not None and dist[u] >= limit:
                continue
            for v in self.neighbors[u]:
                v = int(v)
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


@dataclass(frozen=True, eq=False)
class HyperGraph:
    """Typed hypergraph.  ``node_types[v]`` lies in ``[0, n_types)``."""

    node_types: tuple[int, ...]
    hyperedges: tuple[tuple[int, ...], ...]
    n_types: int
    labels: tuple[str, ...] = ()
    type_labels: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.node_types)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(n)))
        if not self.type_labels:
            object.__setattr__(self, "type_labels", tuple(str(t) for t in range(self.n_types)))
        for t in self.node_types:
            if not 0 <= t < self.n_types:
                raise ValueError(f"node type {t} outside [0, {self.n_types})")
        for e in self.hyperedges:
            if len(e) < 2:
                raise ValueError(f"hyperedge {e} has fewer than 2 nodes")
            if len(set(e)) != len(e):
                raise ValueError(f"hyperedge {e} repeats a node")
            for v in e:
                if not 0 <= v < n:
                    raise ValueError(f"hyperedge {e} references unknown node {v}")

    @property
    def n(self) -> int:
        return len(self.node_types)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(tuple(e) for e in self.hyperedges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return incidence(self).sum(axis=1)

    def nodes_of_type(self, t: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.node_types) == t)

    def summary(self) -> dict:
        A = hyper_adjacency(self)
        comps = int(connected_components(csr_matrix(A), directed=False)[0]) if self.n else 0
        return {"nodes": self.n, "edges": len(self.hyperedges), "components": comps}


@dataclass(frozen=True)
class DerivedMatrices:
    S: np.ndarray
    P: np.ndarray
    degrees: np.ndarray = field(repr=False)


# -- derived matrices -----------------------------------------------------------

def adjacency(g: Graph) -> np.ndarray:
    S = np.zeros((g.n, g.n))
    for u, v, w in g.edges:
        S[u, v] += w
        if u != v:
            S[v, u] += w
    return S


def transition(g: Graph) -> np.ndarray:
    """Row-stochastic ``D^{-1} S``; isolated nodes keep an all-zero row."""
    S = adjacency(g)
    d = S.sum(axis=1)
    P = np.zeros_like(S)
    live = d > 0
    P[live] = S[live] / d[live, None]
    return P


def derived(g: Graph) -> DerivedMatrices:
    return DerivedMatrices(S=adjacency(g), P=transition(g), degrees=g.degrees)


def incidence(h: HyperGraph) -> np.ndarray:
    H = np.zeros((h.n, len(h.hyperedges)))
    for j, e in enumerate(h.hyperedges):
        H[list(e), j] = 1.0
    return H


def hyper_adjacency(h: HyperGraph) -> np.ndarray:
    """``H H^T - D_v``: co-occurrence counts with a zero diagonal."""
    H = incidence(h)
    return H @ H.T - np.diag(H.sum(axis=1))


def laplacian(A: np.ndarray) -> np.ndarray:
    """``diag(column sums) - A`` for a symmetric non-negative matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"laplacian needs a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12):
        raise ValueError("laplacian needs a symmetric matrix")
    if np.any(A < 0):
        raise ValueError("laplacian needs non-negative entries")
    return np.diag(A.sum(axis=0)) - A


# -- sampling -------------------------------------------------------------------

def degree_biased_sample(neighbors: Sequence[int], cap: int, rng: np.random.Generator,
                         degrees: np.ndarray) -> np.ndarray:
    """At most ``cap`` distinct neighbours, drawn without replacement with P(v) ~ d_v."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    neighbors = np.asarray(neighbors, dtype=int)
    if len(neighbors) <= cap:
        return neighbors.copy()
    w = np.asarray(degrees, dtype=np.float64)[neighbors]
    return rng.choice(neighbors, size=cap, replace=False, p=w / w.sum())


# -- loaders --------------------------------------------------------------------

def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def load_edge_list(path: str | Path, weighted: bool = False) -> Graph:
    """Read ``u v`` / ``u v w`` lines.  Repeated pairs accumulate weight."""
    rows = []
    for lineno, tok in _content_lines(path):
        if len(tok) not in (2, 3):
            raise GraphFormatError(f"expected 'u v' or 'u v w', got {len(tok)} fields", lineno)
        w = 1.0
        if weighted and len(tok) == 3:
            try:
                w = float(tok[2])
            except ValueError:
                raise GraphFormatError(f"weight {tok[2]!r} is not a number", lineno) from None
            if not np.isfinite(w) or w < 0:
                raise GraphFormatError(f"negative or non-finite weight {tok[2]}", lineno)
        if tok[0] == tok[1]:
            raise GraphFormatError(f"self-loop on {tok[0]!r}", lineno)
        rows.append((tok[0], tok[1], w))
    labels = _sorted_labels(x for r in rows for x in r[:2])
    index = {lab: i for i, lab in enumerate(labels)}
    g = Graph.from_edges(len(labels), [(index[a], index[b], w) for a, b, w in rows], labels=labels)
    log.info("loaded %s: %s", path, g.summary())
    return g


def load_type_map(path: str | Path) -> tuple[list[str], list[str], dict[str, str]]:
    mapping: dict[str, str] = {}
    for lineno, tok in _content_lines(path):
        if len(tok) != 2:
            raise GraphFormatError("expected 'id type'", lineno)
        mapping[tok[0]] = tok[1]
    return _sorted_labels(mapping), _sorted_labels(mapping.values()), mapping


def load_hyperedge_list(path: str | Path, type_map_path: str | Path) -> HyperGraph:
    """One hyperedge per line; every member must appear in the type map."""
    node_labels, type_labels, mapping = load_type_map(type_map_path)
    index = {lab: i for i, lab in enumerate(node_labels)}
    tindex = {lab: i for i, lab in enumerate(type_labels)}
    edges = []
    for lineno, tok in _content_lines(path):
        if len(tok) < 2:
            raise GraphFormatError("hyperedge needs at least 2 nodes", lineno)
        missing = [t for t in tok if t not in index]
        if missing:
            raise GraphFormatError(f"node {missing[0]!r} not in type map", lineno)
        if len(set(tok)) != len(tok):
            raise GraphFormatError("hyperedge repeats a node", lineno)
        edges.append(tuple(index[t] for t in tok))
    h = HyperGraph(node_types=tuple(tindex[mapping[lab]] for lab in node_labels),
                   hyperedges=tuple(edges), n_types=len(type_labels),
                   labels=tuple(node_labels), type_labels=tuple(type_labels))
    log.info("loaded %s: %s", path, h.summary())
    return h


def write_edge_list(g: Graph, path: str | Path, weighted: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, w in g.edges:
            if weighted:
                fh.write(f"{g.labels[u]} {g.labels[v]} {w!r}\n")
            else:
                fh.write(f"{g.labels[u]} {g.labels[v]}\n")


def write_hypergraph(h: HyperGraph, edges_path: str | Path, types_path: str | Path) -> None:
    with open(edges_path, "w", encoding="utf-8") as fh:
        for e in h.hyperedges:
            fh.write(" ".join(h.labels[v] for v in e) + "\n")
    with open(types_path, "w", encoding="utf-8") as fh:
        for v in range(h.n):
            fh.write(f"{h.labels[v]} {h.type_labels[h.node_types[v]]}\n")
