import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netembed.graph import (Graph, GraphFormatError, HyperGraph, adjacency, degree_biased_sample, hyper_adjacency,
                            incidence, laplacian, load_edge_list, load_hyperedge_list, transition)
from netembed.harness import generators


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_two_lines_make_a_path(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "0 1\n1 2\n"))
    assert g.n == 3 and [e[:2] for e in g.edges] == [(0, 1), (1, 2)]


def test_empty_file_gives_empty_graph(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "# nothing\n\n"))
    assert g.n == 0 and adjacency(g).shape == (0, 0)


def test_duplicate_lines_accumulate_weight(tmp_path):
    text = "a b 1\nb c 2\n# comment\na b 3\nc a 1\nb a 0.5\n"
    g = load_edge_list(write(tmp_path, "g.txt", text), weighted=True)
    S = adjacency(g)
    counts = {}
    for line in text.splitlines():
        tok = line.split("#")[0].split()
        if tok:
            key = frozenset(tok[:2])
            counts[key] = counts.get(key, 0.0) + float(tok[2])
    for key, w in counts.items():
        u, v = (g.index_of(x) for x in key)
        assert S[u, v] == S[v, u] == w
    assert g.m == len(counts)


def test_malformed_line_reports_line_number(tmp_path):
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edge_list(write(tmp_path, "g.txt", "0 1\n0 1 2 3\n"))


def test_negative_weight_rejected(tmp_path):
    with pytest.raises(GraphFormatError, match="line 1"):
        load_edge_list(write(tmp_path, "g.txt", "0 1 -1\n"), weighted=True)


def test_labels_are_reindexed_densely(tmp_path):
    g = load_edge_list(write(tmp_path, "g.txt", "10 30\n30 20\n"))
    assert g.labels == ("10", "20", "30") and g.n == 3


def test_single_hyperedge(tmp_path):
    h = load_hyperedge_list(write(tmp_path, "h.txt", "0 1 2\n"), write(tmp_path, "t.txt", "0 a\n1 b\n2 c\n"))
    assert h.n_types == 3 and h.hyperedges == ((0, 1, 2),)


def test_hyperedge_of_size_one_rejected(tmp_path):
    with pytest.raises(GraphFormatError, match="at least 2"):
        load_hyperedge_list(write(tmp_path, "h.txt", "0\n"), write(tmp_path, "t.txt", "0 a\n"))


def test_hyperedge_with_unknown_node_rejected(tmp_path):
    with pytest.raises(GraphFormatError, match="type map"):
        load_hyperedge_list(write(tmp_path, "h.txt", "0 9\n"), write(tmp_path, "t.txt", "0 a\n1 b\n"))


def test_incidence_column_sums_are_edge_sizes(rng):
    edges = [tuple(rng.choice(12, size=int(rng.integers(2, 5)), replace=False)) for _ in range(10)]
    h = HyperGraph(node_types=(0,) * 12, hyperedges=tuple(edges), n_types=1)
    assert np.array_equal(incidence(h).sum(axis=0), [len(e) for e in edges])


def test_adjacency_cases():
    assert not adjacency(Graph.from_edges(3, [])).any()
    S = adjacency(Graph.from_edges(2, [(0, 1)]))
    assert S[0, 1] == S[1, 0] == 1
    tri = [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)]
    S = adjacency(Graph.from_edges(3, tri))
    for u, v, w in tri:
        assert S[u, v] == S[v, u] == w


def test_transition_rows():
    P = transition(generators.star(3))
    assert np.allclose(P[0, 1:], 1 / 3)
    P = transition(Graph.from_edges(3, [(0, 1)]))
    assert not P[2].any()


def test_transition_is_degree_normalised(rng):
    g = generators.erdos_renyi(10, 0.4, 3)
    S, P = adjacency(g), transition(g)
    for i in range(g.n):
        for j in range(g.n):
            d = S[i].sum()
            assert P[i, j] == (S[i, j] / d if d else 0.0)


def test_hyper_adjacency_cases():
    h = HyperGraph(node_types=(0, 1, 2), hyperedges=((0, 1, 2),), n_types=3)
    assert np.array_equal(hyper_adjacency(h), np.ones((3, 3)) - np.eye(3))
    h = HyperGraph(node_types=(0, 1, 2, 2), hyperedges=((0, 1, 2), (0, 1, 3)), n_types=3)
    assert hyper_adjacency(h)[0, 1] == 2
    assert not hyper_adjacency(HyperGraph(node_types=(0, 0), hyperedges=(), n_types=1)).any()


@given(st.integers(2, 8), st.lists(st.lists(st.integers(0, 7), min_size=2, max_size=4, unique=True), max_size=10))
def test_hyper_adjacency_matches_pair_counts(n, raw):
    edges = tuple(tuple(v % n for v in e) for e in raw if len({v % n for v in e}) == len(e))
    h = HyperGraph(node_types=(0,) * n, hyperedges=edges, n_types=1)
    A = hyper_adjacency(h)
    for i, j in itertools.product(range(n), repeat=2):
        expected = 0 if i == j else sum(1 for e in edges if i in e and j in e)
        assert A[i, j] == expected


def test_laplacian_cases(rng):
    assert np.array_equal(laplacian(np.array([[0, 1], [1, 0]])), [[1, -1], [-1, 1]])
    assert not laplacian(np.zeros((3, 3))).any()
    L = laplacian(adjacency(generators.erdos_renyi(6, 0.5, 1)))
    assert np.linalg.eigvalsh(L).min() >= -1e-9


def test_laplacian_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        laplacian(np.array([[0, 1], [0, 0]]))


@given(st.integers(1, 10), st.floats(0, 1), st.integers(0, 1000))
def test_laplacian_annihilates_ones(n, p, seed):
    L = laplacian(adjacency(generators.erdos_renyi(n, p, seed)))
    assert np.abs(L @ np.ones(n)).max() < 1e-9


@given(st.integers(0, 1000))
def test_adjacency_ignores_edge_order(seed):
    g = generators.erdos_renyi(8, 0.4, seed)
    shuffled = list(g.edges)
    np.random.default_rng(seed).shuffle(shuffled)
    assert np.array_equal(adjacency(Graph.from_edges(g.n, shuffled)), adjacency(g))


def test_degree_biased_sample_small_set_returned_whole(rng):
    assert sorted(degree_biased_sample([4, 5, 6], 300, rng, np.ones(7))) == [4, 5, 6]
    assert len(degree_biased_sample([], 3, rng, np.ones(1))) == 0


def test_degree_biased_sample_frequency(rng):
    degrees = np.array([9, 1])
    hits = sum(degree_biased_sample([0, 1], 1, rng, degrees)[0] == 0 for _ in range(10000))
    assert abs(hits / 10000 - 0.9) <= 0.03


def test_degree_biased_sample_is_distinct(rng):
    out = degree_biased_sample(np.arange(20), 5, rng, np.arange(1, 21))
    assert len(set(out)) == 5


def test_summary_reports_components():
    g = Graph.from_edges(5, [(0, 1), (2, 3)])
    assert g.summary() == {"nodes": 5, "edges": 2, "components": 3}


def test_graph_rejects_self_loops_and_bad_ids():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 5)])
