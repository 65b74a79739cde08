import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netembed import sdne
from netembed import tensor as T
from netembed.errors import DisconnectedNodeError
from netembed.gradcheck import finite_diff_check
from netembed.graph import adjacency
from netembed.harness import generators, oracles


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def small_model(n=6, hidden=(5,), dim=3, seed=0, **kw):
    cfg = sdne.SdneConfig(hidden=hidden, dim=dim, seed=seed, **kw)
    return sdne.SdneModel.init(n, cfg, np.random.default_rng(seed))


def test_identity_layer_on_zero_input():
    m = small_model(n=3, hidden=(), dim=3)
    m.params["enc0.W"].data[:] = np.eye(3)
    m.params["enc0.b"].data[:] = 0
    assert np.array_equal(sdne.encode(m, np.zeros(3)).data, np.full(3, 0.5))


def test_zero_weights_ignore_input(rng):
    m = small_model()
    for name, p in m.params.items():
        p.data[:] = 0
    a, b = sdne.encode(m, rng.random(6)).data, sdne.encode(m, rng.random(6)).data
    assert np.array_equal(a, b)
    assert np.array_equal(sdne.decode(m, rng.random(3)).data, sdne.decode(m, rng.random(3)).data)


def test_encode_decode_match_scalar_recomputation(rng):
    m = small_model(hidden=(4,))
    x = rng.random(6)

    def layer(W, b, v):
        return np.array([sigmoid(sum(W[i, j] * v[i] for i in range(len(v))) + b[j]) for j in range(W.shape[1])])
    P = {k: v.data for k, v in m.params.items()}
    y = layer(P["enc1.W"], P["enc1.b"], layer(P["enc0.W"], P["enc0.b"], x))
    assert np.allclose(sdne.encode(m, x).data, y, rtol=0, atol=1e-12)
    xh = layer(P["dec0.W"], P["dec0.b"], layer(P["dec1.W"], P["dec1.b"], y))
    out = sdne.decode(m, y).data
    assert np.allclose(out, xh, rtol=0, atol=1e-12)
    assert np.all((out > 0) & (out < 1))


def test_width_mismatch_raises():
    m = small_model()
    with pytest.raises(T.ShapeError):
        sdne.encode(m, np.zeros(5))
    with pytest.raises(T.ShapeError):
        sdne.decode(m, np.zeros(4))


def test_decode_of_encode_is_finite(rng):
    m = small_model()
    assert np.all(np.isfinite(sdne.decode(m, sdne.encode(m, rng.normal(size=(4, 6)))).data))


def test_second_order_loss_cases():
    X = np.array([[1.0, 0.0]])
    assert sdne.loss_second_order(X, T.tensor(X), 2.0).item() == 0.0
    assert sdne.loss_second_order(X, T.tensor([[0.0, 1.0]]), 2.0).item() == 5.0
    Xh = T.tensor([[0.2, 0.7]])
    assert sdne.loss_second_order(X, Xh, 1.0).item() == pytest.approx(np.sum((Xh.data - X) ** 2))


def test_second_order_loss_increases_with_beta():
    X = np.array([[1.0, 0.0, 1.0]])
    Xh = T.tensor([[0.5, 0.1, 1.0]])
    vals = [sdne.loss_second_order(X, Xh, b).item() for b in (1.5, 2.0, 5.0, 10.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_first_order_loss_cases():
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert sdne.loss_first_order(S, np.ones((2, 3))).item() == 0.0
    assert sdne.loss_first_order(S, np.array([[0.0, 0.0], [2.0, 0.0]])).item() == 8.0


@given(st.integers(2, 12), st.floats(0.1, 0.9), st.integers(0, 10_000))
def test_first_order_trace_form_matches_pair_sum(n, p, seed):
    g = generators.erdos_renyi(n, p, seed)
    S = adjacency(g) * np.random.default_rng(seed).uniform(0.5, 2.0, size=(n, n))
    S = (S + S.T) / 2
    Y = np.random.default_rng(seed + 1).normal(size=(n, 3))
    ref = oracles.first_order_loops(S, Y)
    assert sdne.loss_first_order(S, Y).item() == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_loss_mix_components(rng):
    m = small_model(alpha=0.3, nu=0.01, beta=3.0)
    S = adjacency(generators.erdos_renyi(6, 0.5, 2))
    Y = sdne.encode(m, S)
    Xh = sdne.decode(m, Y)
    total = sdne.loss_mix(m, S, S, Y, Xh).item()
    reg = 0.5 * sum(np.sum(W.data ** 2) for W in m.weights())
    parts = (sdne.loss_second_order(S, Xh, 3.0).item() + 0.3 * oracles.first_order_loops(S, Y.data) + 0.01 * reg)
    assert total == pytest.approx(parts, rel=1e-12)


def test_loss_mix_degenerate_weights():
    m = small_model(alpha=0.0, nu=0.0, beta=2.0)
    S = adjacency(generators.erdos_renyi(6, 0.5, 2))
    Y = sdne.encode(m, S)
    Xh = sdne.decode(m, Y)
    assert sdne.loss_mix(m, S, S, Y, Xh).item() == sdne.loss_second_order(S, Xh, 2.0).item()
    for p in m.params.values():
        p.data[:] = 0
    m.config.alpha, m.config.nu = 1.0, 1.0
    Y = T.tensor(np.ones((6, 3)))
    assert sdne.loss_mix(m, S, S, Y, T.tensor(S)).item() == 0.0


def test_loss_mix_gradient_check():
    g = generators.erdos_renyi(6, 0.5, 4)
    S = adjacency(g)
    m = small_model(alpha=0.2, nu=0.01)
    f = lambda: sdne.batch_loss(m, S, np.arange(6))
    assert finite_diff_check(f, list(m.params.values())) < 1e-4


def test_training_halves_loss():
    g = generators.sbm([10, 10], 0.8, 0.1, seed=0)
    model, Y = sdne.train(g, sdne.SdneConfig(epochs=200, seed=7))
    assert model.final_loss <= 0.5 * model.initial_loss
    assert Y.shape == (20, 16)


def test_plain_autoencoder_path():
    g = generators.sbm([5, 5], 0.8, 0.1, seed=0)
    model, _ = sdne.train(g, sdne.SdneConfig(alpha=0.0, nu=0.0, beta=1.0 + 1e-9, epochs=30))
    S = adjacency(g)
    Xh = sdne.decode(model, sdne.encode(model, S))
    assert model.final_loss == pytest.approx(sdne.loss_second_order(S, Xh, 1.0 + 1e-9).item())


def test_minibatch_training_runs():
    g = generators.sbm([6, 6], 0.8, 0.1, seed=1)
    model, Y = sdne.train(g, sdne.SdneConfig(epochs=20, batch_size=5))
    assert np.all(np.isfinite(Y)) and model.final_loss < model.initial_loss


def test_beta_must_exceed_one():
    with pytest.raises(ValueError):
        sdne.SdneConfig(beta=1.0)


def test_new_vertex_embedding():
    g = generators.sbm([5, 5], 0.8, 0.1, seed=0)
    model, Y = sdne.train(g, sdne.SdneConfig(epochs=10))
    S = adjacency(g)
    before = {k: v.data.copy() for k, v in model.params.items()}
    assert np.allclose(sdne.embed_new_vertex(model, S[3]), Y[3], rtol=0, atol=1e-10)
    vec = sdne.embed_new_vertex(model, (np.arange(10) % 3 == 0).astype(float))
    assert vec.shape == (16,) and np.all(np.isfinite(vec))
    assert all(np.array_equal(before[k], v.data) for k, v in model.params.items())
    with pytest.raises(DisconnectedNodeError, match="no connections"):
        sdne.embed_new_vertex(model, np.zeros(10))


def test_state_round_trip():
    g = generators.sbm([4, 4], 0.8, 0.1, seed=0)
    model, Y = sdne.train(g, sdne.SdneConfig(epochs=5))
    arrays, meta = model.state()
    clone = sdne.SdneModel.from_state(arrays, meta)
    assert np.array_equal(sdne.embed(clone, adjacency(g)), Y)
