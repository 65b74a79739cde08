import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netembed import drne
from netembed import tensor as T
from netembed.errors import DisconnectedNodeError
from netembed.gradcheck import finite_diff_check
from netembed.graph import Graph, adjacency
from netembed.harness import generators, oracles


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def zero_params(k, layer_norm=False):
    W = {g: T.parameter(np.zeros((k, 2 * k))) for g in drne.GATES}
    b = {g: T.parameter(np.zeros(k)) for g in drne.GATES}
    return drne.LstmParams(W=W, b=b, gain=T.parameter(np.ones(k)), layer_norm=layer_norm)


def small_state(graph, seed=0, **kw):
    cfg = drne.DrneConfig(dim=4, mlp_hidden=3, init_jitter=0.3, seed=seed, **kw)
    return drne.init_state(graph, cfg, np.random.default_rng(seed))


def test_zero_cell_gives_zero_hidden():
    h, c = drne.lstm_cell(zero_params(3), np.zeros(3), np.zeros(3), np.zeros(3))
    assert not h.data.any() and not c.data.any()


def test_cell_matches_scalar_recomputation(rng):
    p = drne.LstmParams.init(3, rng)
    p.gain.data[:] = rng.uniform(0.5, 2, 3)
    for g in drne.GATES:
        p.b[g].data[:] = rng.normal(size=3)
    h0, c0, x = rng.normal(size=(3, 3))
    z = np.r_[h0, x]
    pre = {g: p.W[g].data @ z + p.b[g].data for g in drne.GATES}
    c = sigmoid(pre["f"]) * c0 + sigmoid(pre["i"]) * np.tanh(pre["C"])
    ln = p.gain.data * (c - c.mean()) / np.sqrt(c.var() + drne.LN_EPS ** 2)
    h_ref = sigmoid(pre["o"]) * np.tanh(ln)
    h, c_out = drne.lstm_cell(p, h0, c0, x)
    assert np.allclose(h.data, h_ref, rtol=0, atol=1e-12)
    assert np.allclose(c_out.data, c, rtol=0, atol=1e-12)


def test_cell_rejects_wrong_width(rng):
    with pytest.raises(T.ShapeError, match="x_t"):
        drne.lstm_cell(drne.LstmParams.init(3, rng), np.zeros(3), np.zeros(3), np.zeros(4))


@pytest.mark.parametrize("seed", range(3))
def test_cell_gradients(seed):
    rng = np.random.default_rng(seed)
    p = drne.LstmParams.init(3, rng)
    h0, c0, x = (T.parameter(rng.normal(size=3)) for _ in range(3))
    w = rng.normal(size=3)
    f = lambda: T.tsum(drne.lstm_cell(p, h0, c0, x)[0] * w)
    assert finite_diff_check(f, [*p.tensors(), h0, c0, x]) < 1e-4


def test_linear_construction_accumulates_products():
    g = generators.star(3)
    params, table = drne.construct_centrality_weights("degree", g)
    F, C = table[:, 0], table[:, 1]
    out = drne.run_lstm(params, table, [np.array([1, 2, 3])]).numpy()[0]
    assert out[1] == pytest.approx(sum(F[u] * C[u] for u in (1, 2, 3)), abs=1e-15)


def test_layer_norm_cases():
    assert np.allclose(drne.layer_norm([1.0, -1.0], np.ones(2)).data, [1.0, -1.0])
    assert not drne.layer_norm([2.0, 2.0, 2.0], np.ones(3)).data.any()


@given(arrays(np.float64, 6, elements=st.floats(-5, 5)), st.floats(-10, 10))
def test_layer_norm_moments_and_shift(c, shift):
    if c.std() < 1e-3:
        return
    g = np.linspace(0.5, 2.0, 6)
    out = drne.layer_norm(c, g).data / g
    assert abs(out.mean()) < 1e-10
    assert abs(out.var() - 1) < 1e-8
    assert np.allclose(drne.layer_norm(c + shift, g).data / g, out, rtol=0, atol=1e-10)


def test_single_neighbor_is_one_step():
    g = Graph.from_edges(2, [(0, 1)])
    st_ = small_state(g)
    h, _ = drne.lstm_cell(st_.lstm, np.zeros(4), np.zeros(4), st_.X.data[1])
    assert np.allclose(drne.aggregate(st_, 0), h.data, rtol=0, atol=1e-15)


def test_neighbours_sorted_by_degree_then_id():
    degrees = np.array([0, 3, 1, 2, 1])
    assert list(drne.order_neighbors([1, 2, 3], degrees)) == [2, 3, 1]
    assert list(drne.order_neighbors([4, 1, 2], degrees)) == [2, 4, 1]
    assert list(drne.order_neighbors([1, 2, 3], degrees, descending=True)) == [1, 3, 2]


def test_equal_degree_permutation_does_not_matter():
    degrees = np.array([2, 2, 2, 2, 5])
    a = drne.order_neighbors([3, 0, 2, 1, 4], degrees)
    b = drne.order_neighbors([1, 2, 4, 0, 3], degrees)
    assert np.array_equal(a, b)


def test_isolated_node_aggregates_to_zero():
    g = Graph.from_edges(3, [(0, 1)])
    assert not drne.aggregate(small_state(g), 2).any()


def test_capped_neighbourhood_needs_rng_and_is_deterministic():
    g = generators.star(6)
    st_ = small_state(g, cap=3)
    with pytest.raises(ValueError):
        drne.aggregate(st_, 0)
    a = drne.aggregate(st_, 0, np.random.default_rng(5))
    b = drne.aggregate(st_, 0, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_recursive_loss_cases():
    g = generators.erdos_renyi(6, 0.5, 1)
    st_ = small_state(g)
    nodes = np.arange(6)
    agg = np.array([drne.aggregate(st_, v) for v in nodes])
    ref = sum(np.sum((st_.X.data[v] - agg[v]) ** 2) for v in nodes)
    assert drne.loss_recursive(st_, nodes).item() == pytest.approx(ref, rel=1e-12)
    st_.X.data[:] = 0.0
    a = drne.aggregate(st_, 0)
    assert drne.loss_recursive(st_, [0]).item() == pytest.approx(np.sum(a ** 2), rel=1e-12)


def test_recursive_loss_zero_at_fixed_point():
    g = generators.star(3)
    params, table = drne.construct_centrality_weights("eigenvector", g)
    st_ = small_state(g)
    st_.X = T.parameter(table)
    st_.lstm = params
    assert drne.loss_recursive(st_, np.arange(4)).item() < 1e-28


def test_regularizer_cases():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    st_ = small_state(g)
    nodes = np.arange(4)
    agg = np.array([drne.aggregate(st_, v) for v in nodes])
    P = {k: v.data for k, v in st_.mlp.items()}
    pred = np.maximum(agg @ P["mlp0.W"] + P["mlp0.b"], 0) @ P["mlp1.W"] + P["mlp1.b"]
    target = np.log(np.array([1, 2, 1, 0]) + 1.0)
    assert target[3] == 0.0
    ref = np.sum((pred[:, 0] - target) ** 2)
    assert drne.loss_regularizer(st_, nodes).item() == pytest.approx(ref, rel=1e-12)
    st_.mlp["mlp1.W"].data[:] = 0
    for v in nodes:
        st_.mlp["mlp1.b"].data[:] = target[v]
        assert drne.loss_regularizer(st_, [v]).item() == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_total_loss_gradients(seed):
    g = generators.erdos_renyi(5, 0.6, seed)
    st_ = small_state(g, seed=seed, lam=0.5)
    f = lambda: drne.total_loss(st_, np.arange(5))
    assert finite_diff_check(f, [st_.X, *st_.theta()]) < 1e-4


def test_default_neighbour_cap():
    assert drne.DrneConfig().cap == 300


def test_training_reduces_loss_and_keeps_norm():
    g = generators.barbell(4)
    state = drne.train(g, drne.DrneConfig(dim=8, iterations=40, lam=0.5))
    assert state.history[-1] < state.history[0]
    assert np.linalg.norm(state.X.data, axis=1).mean() > 1e-3


def test_training_is_deterministic():
    g = generators.barbell(3)
    cfg = drne.DrneConfig(dim=4, iterations=5, init_jitter=0.1, seed=3)
    assert np.array_equal(drne.train(g, cfg).X.data, drne.train(g, cfg).X.data)


def test_minibatch_and_descending_variants_run():
    g = generators.barbell(3)
    s = drne.train(g, drne.DrneConfig(dim=4, iterations=3, batch_size=2, sort="descending"))
    assert np.all(np.isfinite(s.X.data))


def test_star_degree_centrality():
    g = generators.star(4)
    params, table = drne.construct_centrality_weights("degree", g)
    out = drne.linear_aggregate(params, table, g)
    assert np.allclose(out[:, 1], [4, 1, 1, 1, 1], rtol=0, atol=1e-12)
    assert np.allclose(out[:, 1], oracles.degree_count(adjacency(g)), rtol=0, atol=1e-12)


def test_construction_uses_stated_weights():
    params, _ = drne.construct_centrality_weights("degree", generators.star(2))
    W = {g: params.W[g].data[1] for g in drne.GATES}
    b = {g: params.b[g].data[1] for g in drne.GATES}
    # second coordinate: rows over [h1, h2, F, C]
    assert list(W["f"]) == list(W["o"]) == [0, 0, 0, 0]
    assert list(W["i"][2:]) == [1, 0] and list(W["C"][2:]) == [0, 1]
    assert (b["f"], b["o"], b["i"], b["C"]) == (1, 1, 0, 0)


def test_eigenvector_centrality_is_full_fixed_point():
    g = generators.barbell(3)
    params, table = drne.construct_centrality_weights("eigenvector", g)
    lam, ref = oracles.eigenvector_power(adjacency(g))
    assert np.allclose(table[:, 0], 1 / lam, rtol=0, atol=1e-12)
    assert np.allclose(drne.linear_aggregate(params, table, g), table, rtol=0, atol=1e-12)
    assert np.allclose(table[:, 1], ref, rtol=0, atol=1e-10)


def test_pagerank_on_single_edge():
    g = Graph.from_edges(2, [(0, 1)])
    params, table = drne.construct_centrality_weights("pagerank", g)
    out = drne.linear_aggregate(params, table, g)[:, 1]
    assert np.allclose(out, [0.5, 0.5], rtol=0, atol=1e-15)
    assert np.allclose(out, oracles.pagerank_power(adjacency(g)), rtol=0, atol=1e-12)


def test_unknown_centrality_rejected():
    with pytest.raises(ValueError, match="unsupported"):
        drne.construct_centrality_weights("katz", generators.star(3))


def test_eigenvector_needs_connected_graph():
    with pytest.raises(ValueError, match="connected"):
        drne.construct_centrality_weights("eigenvector", Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_new_node_embedding():
    g = generators.erdos_renyi(6, 0.6, 2)
    st_ = small_state(g)
    v = 3
    assert np.allclose(drne.embed_new_node(st_, g.neighbors[v]), drne.aggregate(st_, v), rtol=0, atol=0)
    h, _ = drne.lstm_cell(st_.lstm, np.zeros(4), np.zeros(4), st_.X.data[2])
    assert np.allclose(drne.embed_new_node(st_, [2]), h.data, rtol=0, atol=1e-15)
    with pytest.raises(DisconnectedNodeError):
        drne.embed_new_node(st_, [])


def test_state_round_trip():
    g = generators.barbell(3)
    s = drne.train(g, drne.DrneConfig(dim=4, iterations=2))
    clone = drne.DrneState.from_state(*s.state())
    for v in range(g.n):
        assert np.array_equal(drne.aggregate(clone, v), drne.aggregate(s, v))
