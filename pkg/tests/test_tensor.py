import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netembed import tensor as T
from netembed.gradcheck import finite_diff_check
from netembed.optim import MissingGradientError, Optimizer

finite = st.floats(-3, 3, allow_nan=False)


def test_sigmoid_at_zero():
    assert T.sigmoid(T.tensor(0.0)).item() == 0.5


def test_identity_matmul(rng):
    A = rng.normal(size=(3, 3))
    assert np.array_equal(T.matmul(np.eye(3), A).data, A)


def test_sum_of_hadamard():
    assert T.tsum(T.mul([1.0, 2.0], [3.0, 4.0])).item() == 11.0


def test_square_gradient():
    x = T.parameter(3.0)
    assert T.square(x).backward()[x] == 6.0


def test_sigmoid_gradient_at_zero():
    x = T.parameter(0.0)
    assert T.sigmoid(x).backward()[x] == 0.25


def test_two_layer_mlp_gradients(rng):
    x = T.tensor(rng.normal(size=(4, 5)))
    W1, b1 = T.parameter(rng.normal(size=(5, 6))), T.parameter(np.zeros(6))
    W2 = T.parameter(rng.normal(size=(6, 1)))
    f = lambda: T.sqnorm(T.matmul(T.sigmoid(T.matmul(x, W1) + b1), W2))
    assert finite_diff_check(f, [W1, b1, W2]) < 1e-4


def test_backward_rejects_non_scalar():
    x = T.parameter(np.ones(3))
    with pytest.raises(T.TraceError):
        (x * 2).backward()


def test_backward_twice_rejected():
    x = T.parameter(2.0)
    loss = x * x
    loss.backward()
    with pytest.raises(T.TraceError):
        loss.backward()


def test_shape_error_names_both_shapes():
    with pytest.raises(T.ShapeError, match=r"\(2, 3\).*\(4, 5\)"):
        T.matmul(np.ones((2, 3)), np.ones((4, 5)))
    with pytest.raises(T.ShapeError, match="add"):
        T.add(np.ones(2), np.ones(3))


def test_non_finite_error_names_op():
    with pytest.raises(T.NumericalError, match="exp"):
        T.exp(T.tensor(1000.0))
    with pytest.raises(T.NumericalError, match="div"):
        T.div(1.0, 0.0)


def test_log_clamps_at_floor():
    assert T.log(T.tensor(0.0)).item() == pytest.approx(np.log(T.LOG_FLOOR))
    x = T.parameter(0.0)
    assert T.log(x).backward()[x] == 0.0


def test_sigmoid_and_softplus_are_stable_at_extremes():
    assert T.sigmoid(T.tensor(-800.0)).item() == 0.0
    assert T.softplus(T.tensor(800.0)).item() == 800.0
    assert T.softplus(T.tensor(-800.0)).item() == 0.0


UNARY = {
    "sigmoid": T.sigmoid, "tanh": T.tanh, "exp": T.exp, "elu": T.elu, "softplus": T.softplus,
    "log": lambda x: T.log(T.square(x) + 0.5), "sqrt": lambda x: T.sqrt(T.square(x) + 0.5),
    "relu": lambda x: T.relu(x + 0.05), "power": lambda x: T.power(T.square(x) + 1.0, 1.5),
    "neg": T.neg, "square": T.square, "mean": lambda x: T.mean(x, axis=0),
    "transpose": lambda x: T.transpose(x) * np.arange(12.0).reshape(4, 3),
    "reshape": lambda x: T.reshape(x, (4, 3)) * np.arange(12.0).reshape(4, 3),
    "take": lambda x: x[np.array([0, 2, 0]), 1:],
}


@pytest.mark.parametrize("name", sorted(UNARY))
@pytest.mark.parametrize("seed", range(5))
def test_unary_primitive_gradients(name, seed):
    rng = np.random.default_rng(seed)
    x = T.parameter(rng.normal(size=(3, 4)))
    op = UNARY[name]
    w = rng.normal(size=op(x).shape)
    f = lambda: T.tsum(op(x) * w)
    assert finite_diff_check(f, [x]) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_binary_and_structural_gradients(seed):
    rng = np.random.default_rng(seed)
    a = T.parameter(rng.normal(size=(3, 4)))
    b = T.parameter(rng.normal(size=(1, 4)))
    c = T.parameter(rng.uniform(1, 2, size=(4,)))
    A = T.parameter(rng.normal(size=(2, 3, 3)) + 3 * np.eye(3))
    B = T.parameter(rng.normal(size=(2, 3, 2)))

    def f():
        s = T.tsum((a + b) * (a - b) / c)
        s = s + T.sqnorm(T.concat([a, b], axis=0)) + T.tsum(T.stack([a, a * 2], axis=1) ** 2)
        return s + T.sqnorm(T.solve(A, B)) + T.tsum(T.matmul(a, c))
    assert finite_diff_check(f, [a, b, c, A, B]) < 1e-6


def test_solve_rejects_vector_rhs():
    with pytest.raises(T.ShapeError):
        T.solve(np.eye(2), np.ones(2))


def test_solve_singular_is_numerical_error():
    with pytest.raises(T.NumericalError):
        T.solve(np.zeros((2, 2)), np.ones((2, 1)))


@given(arrays(np.float64, (3, 2), elements=finite), arrays(np.float64, (3, 2), elements=finite))
def test_gradient_of_sum_is_sum_of_gradients(xa, wa):
    x = T.parameter(xa)
    f1 = lambda: T.tsum(T.tanh(x) * wa)
    f2 = lambda: T.sqnorm(T.sigmoid(x))
    g1, g2 = f1().backward()[x], f2().backward()[x]
    g12 = (f1() + f2()).backward()[x]
    assert np.allclose(g12, g1 + g2, rtol=0, atol=1e-12)


@given(arrays(np.float64, (2, 3), elements=finite))
def test_forward_matches_scalar_reference(xa):
    out = T.tanh(T.sigmoid(T.tensor(xa)) * 2.0 - 1.0).data
    ref = np.array([[np.tanh(2.0 / (1.0 + np.exp(-v)) - 1.0) for v in row] for row in xa])
    assert np.allclose(out, ref, rtol=0, atol=1e-12)


def test_gradcheck_constant_function():
    x = T.parameter(np.ones(3))
    assert finite_diff_check(lambda: T.tensor(5.0) + T.tsum(x * 0.0), [x]) == 0.0


def test_gradcheck_squared_norm():
    x = T.parameter([1.0, 2.0])
    assert finite_diff_check(lambda: T.sqnorm(x), [x]) < 1e-6


def test_sgd_step():
    p = T.parameter(1.0)
    opt = Optimizer([p], kind="sgd", lr=0.1)
    opt.step({p: np.array(2.0)})
    assert p.data == pytest.approx(0.8)
    assert opt.t == 1


def test_adam_zero_gradient_leaves_parameter():
    p = T.parameter([1.0, -2.0])
    opt = Optimizer([p], kind="adam", lr=0.0025)
    for _ in range(3):
        opt.step({p: np.zeros(2)})
    assert np.array_equal(p.data, [1.0, -2.0])


def test_drne_default_learning_rate():
    from netembed.drne import DrneConfig
    assert DrneConfig().lr == 0.0025


def test_missing_gradient_names_parameter():
    p = T.parameter(1.0, name="weights")
    with pytest.raises(MissingGradientError, match="weights"):
        Optimizer([p]).step()


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_optimizer_is_deterministic(kind):
    def run():
        p = T.parameter(np.linspace(-1, 1, 4))
        opt = Optimizer([p], kind=kind, lr=0.05)
        for _ in range(10):
            opt.zero_grad()
            T.sqnorm(T.tanh(p) - 0.3).backward()
            opt.step()
        return p.data
    assert np.array_equal(run(), run())


def test_optimizer_minimises_quadratic():
    p = T.parameter([3.0, -2.0])
    opt = Optimizer([p], kind="adam", lr=0.1)
    for _ in range(300):
        opt.zero_grad()
        T.sqnorm(p).backward()
        opt.step()
    assert np.abs(p.data).max() < 1e-2
