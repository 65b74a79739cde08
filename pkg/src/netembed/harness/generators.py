"""Seeded synthetic graphs and hypergraphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from ..graph import Graph, HyperGraph

KINDS = ("sbm", "barbell", "star", "three-type-cluster-hypergraph", "two-hop-star", "erdos-renyi")


@dataclass
class SyntheticSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0


def sbm(sizes, p: float, q: float, seed: int = 0) -> Graph:
    """Stochastic block model: edge probability ``p`` inside blocks, ``q`` across."""
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("block sizes must be positive")
    if not (0 <= q <= 1 and 0 <= p <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p, q)
    keep = rng.random(len(iu)) < prob
    return Graph.from_edges(n, zip(iu[keep], ju[keep]))


def sbm_blocks(sizes) -> np.ndarray:
    return np.repeat(np.arange(len(sizes)), [int(s) for s in sizes])


def erdos_renyi(n: int, p: float, seed: int = 0) -> Graph:
    return sbm([n], p, p, seed)


def barbell(k: int) -> Graph:
    """Two ``k``-cliques joined by a single edge between nodes ``k-1`` and ``k``."""
    if k < 2:
        raise ValueError("clique size must be at least 2")
    edges = [(u, v) for u, v in combinations(range(k), 2)]
    edges += [(u + k, v + k) for u, v in combinations(range(k), 2)]
    edges.append((k - 1, k))
    return Graph.from_edges(2 * k, edges)


def star(leaves: int) -> Graph:
    """Centre 0 joined to ``leaves`` leaves."""
    if leaves < 1:
        raise ValueError("a star needs at least one leaf")
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def two_hop_star(leaves: int) -> Graph:
    """A star (hub 0, leaves ``1..leaves``) plus a probe node attached only to the hub.

    The probe is the last node.  Its two-hop neighbourhood is the leaf set.
    """
    if leaves < 1:
        raise ValueError("a star needs at least one leaf")
    probe = leaves + 1
    return Graph.from_edges(leaves + 2, [(0, i) for i in range(1, leaves + 1)] + [(0, probe)])


def three_type_cluster(per_cluster: int, keep: float = 1.0, seed: int = 0) -> tuple[HyperGraph, np.ndarray]:
    """Three node types, two clusters each; a hyperedge joins one node of each
    type exactly when all three share a cluster id.

    Returns the hypergraph and the per-node cluster ids.  ``keep < 1`` drops a
    random fraction of the true hyperedges.
    """
    if per_cluster < 1:
        raise ValueError("per_cluster must be positive")
    if not 0 < keep <= 1:
        raise ValueError("keep must lie in (0, 1]")
    m = per_cluster
    types, clusters = [], []
    members = {}
    for t in range(3):
        for c in range(2):
            members[t, c] = list(range(len(types), len(types) + m))
            types += [t] * m
            clusters += [c] * m
    edges = []
    for c in range(2):
        edges += list(product(members[0, c], members[1, c], members[2, c]))
    if keep < 1:
        rng = np.random.default_rng(seed)
        mask = rng.random(len(edges)) < keep
        edges = [e for e, k in zip(edges, mask) if k]
    return HyperGraph(node_types=tuple(types), hyperedges=tuple(edges), n_types=3), np.array(clusters)


def generate(spec: SyntheticSpec):
    p, s = dict(spec.params), spec.seed
    if spec.kind == "sbm":
        return sbm(p.get("sizes", [10, 10]), p.get("p", 0.9), p.get("q", 0.05), s)
    if spec.kind == "erdos-renyi":
        return erdos_renyi(p.get("n", 20), p.get("p", 0.2), s)
    if spec.kind == "barbell":
        return barbell(p.get("k", 6))
    if spec.kind == "star":
        return star(p.get("leaves", 4))
    if spec.kind == "two-hop-star":
        return two_hop_star(p.get("leaves", 4))
    if spec.kind == "three-type-cluster-hypergraph":
        return three_type_cluster(p.get("per_cluster", 2), p.get("keep", 1.0), s)[0]
    raise ValueError(f"unknown generator {spec.kind!r}; expected one of {KINDS}")
