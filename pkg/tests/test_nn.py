import numpy as np
import pytest

from curvesig.errors import InvalidSizeError, TrainingDivergence
from curvesig.nn import (
    MLPParams, MLPSpec, Model, adam_init, load_model, mlp_backward, mlp_forward, mlp_init,
    optimizer_step, save_model,
)


def reference_forward(params, x):
    h = np.asarray(x, dtype=float) * params.spec.input_scale
    n = len(params.weights)
    for i in range(n):
        z = np.zeros(params.weights[i].shape[1])
        for o in range(len(z)):
            z[o] = sum(h[k] * params.weights[i][k, o] for k in range(len(h))) + params.biases[i][o]
        if i < n - 1:
            z = np.tanh(z) if params.spec.activation == "tanh" else np.maximum(z, 0)
        h = z
    return h[0]


def test_init_shapes_and_biases():
    spec = MLPSpec(26, (128, 128, 64))
    p = mlp_init(spec, np.random.default_rng(0))
    assert [w.shape for w in p.weights] == [(26, 128), (128, 128), (128, 64), (64, 1)]
    assert all(np.all(b == 0) for b in p.biases)
    assert all(np.all(np.isfinite(w)) for w in p.weights)


def test_init_variance():
    spec = MLPSpec(100, (100,))
    w = np.concatenate([mlp_init(spec, np.random.default_rng(s)).weights[0].ravel() for s in range(2)])
    assert len(w) >= 10_000
    assert np.var(w) == pytest.approx(1 / 100, rel=0.1)


def test_affine_only_network():
    p = mlp_init(MLPSpec(4, ()), np.random.default_rng(0))
    assert mlp_forward(p, np.zeros(4)) == 0.0
    p.weights[0][:] = 1.0
    assert mlp_forward(p, np.array([1.0, 2.0, 3.0, 4.0])) == 10.0


def test_zero_weights_give_bias():
    p = mlp_init(MLPSpec(4, (3, 3)), np.random.default_rng(0))
    for w in p.weights:
        w[:] = 0
    p.biases[-1][:] = 0.75
    assert mlp_forward(p, np.ones(4)) == 0.75


@pytest.mark.parametrize("act", ["tanh", "relu"])
def test_forward_matches_reference(act):
    rng = np.random.default_rng(1)
    spec = MLPSpec(6, (5, 4), act, input_scale=0.3)
    p = mlp_init(spec, rng)
    for b in p.biases:
        b[:] = rng.normal(size=b.shape)
    for _ in range(5):
        x = rng.normal(size=6)
        assert mlp_forward(p, x) == pytest.approx(reference_forward(p, x), abs=1e-12)


def test_forward_batch_and_determinism():
    rng = np.random.default_rng(2)
    p = mlp_init(MLPSpec(8, (16,)), rng)
    X = rng.normal(size=(10, 8))
    y = mlp_forward(p, X)
    assert y.shape == (10,)
    assert mlp_forward(p, X).tobytes() == y.tobytes()
    assert mlp_forward(p, X[3]) == pytest.approx(y[3], abs=1e-15)
    with pytest.raises(InvalidSizeError):
        mlp_forward(p, np.zeros(7))


def _fd_grads(p, x, h=1e-5):
    out = []
    for a in p.arrays():
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            old = a[idx]
            a[idx] = old + h
            up = mlp_forward(p, x)
            a[idx] = old - h
            dn = mlp_forward(p, x)
            a[idx] = old
            g[idx] = (up - dn) / (2 * h)
        out.append(g)
    return out


def _rel_dev(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return np.max(np.abs(a - b)) / scale


@pytest.mark.parametrize("act", ["tanh", "relu"])
@pytest.mark.parametrize("hidden", [(), (7,), (7, 5), (7, 5, 3)])
def test_backward_matches_finite_differences(act, hidden):
    rng = np.random.default_rng(len(hidden))
    spec = MLPSpec(6, hidden, act, input_scale=0.5)
    for _ in range(3):
        p = mlp_init(spec, rng)
        for b in p.biases:
            b[:] = rng.normal(size=b.shape) * 0.1
        x = rng.normal(size=6)
        grads, gx = mlp_backward(p, x, 1.0, wrt_input=True)
        for g, f in zip(grads, _fd_grads(p, x)):
            assert _rel_dev(g, f) <= 1e-4
        h = 1e-5
        fx = np.array([(mlp_forward(p, x + h * e) - mlp_forward(p, x - h * e)) / (2 * h) for e in np.eye(6)])
        assert _rel_dev(gx, fx) <= 1e-4


def test_backward_linear_and_zero_upstream():
    p = mlp_init(MLPSpec(3, ()), np.random.default_rng(0))
    x = np.array([1.5, -2.0, 0.25])
    g = mlp_backward(p, x, 1.0)
    np.testing.assert_array_equal(g[0][:, 0], x)
    assert g[1][0] == 1.0
    assert all(np.all(a == 0) for a in mlp_backward(p, x, 0.0))


def test_backward_batch_sums_upstream():
    rng = np.random.default_rng(3)
    p = mlp_init(MLPSpec(4, (6,)), rng)
    X = rng.normal(size=(5, 4))
    u = rng.normal(size=5)
    total = mlp_backward(p, X, u)
    parts = [mlp_backward(p, X[i], u[i]) for i in range(5)]
    for k, g in enumerate(total):
        np.testing.assert_allclose(g, sum(pp[k] for pp in parts), atol=1e-12)


def test_adam_zero_gradient_keeps_params():
    p = mlp_init(MLPSpec(3, (4,)), np.random.default_rng(0))
    st = adam_init(p, lr=1e-2)
    st.m[0][:] = 1.0
    st2, p2 = optimizer_step(st, p, [np.zeros_like(a) for a in p.arrays()])
    assert st2.step == 1
    # a zero gradient with nonzero momentum still moves; start from zero moments
    st = adam_init(p, lr=1e-2)
    st3, p3 = optimizer_step(st, p, [np.zeros_like(a) for a in p.arrays()])
    for a, b in zip(p.arrays(), p3.arrays()):
        np.testing.assert_array_equal(a, b)
    assert np.all(st2.m[0] == 0.9)


def test_adam_first_step_magnitude():
    p = MLPParams(MLPSpec(1, ()), [np.array([[0.0]])], [np.array([0.0])])
    st = adam_init(p, lr=1e-3)
    _, p2 = optimizer_step(st, p, [np.array([[2.5]]), np.array([-0.1])])
    assert p2.weights[0][0, 0] == pytest.approx(-1e-3, rel=1e-6)
    assert p2.biases[0][0] == pytest.approx(1e-3, rel=1e-5)


def test_adam_converges_on_quadratic():
    p = MLPParams(MLPSpec(1, ()), [np.array([[5.0]])], [np.array([0.0])])
    st = adam_init(p, lr=0.05)
    for _ in range(2000):
        w = p.weights[0][0, 0]
        st, p = optimizer_step(st, p, [np.array([[2 * (w - 1.5)]]), np.array([0.0])])
    assert p.weights[0][0, 0] == pytest.approx(1.5, abs=1e-3)


def test_adam_rejects_non_finite():
    p = mlp_init(MLPSpec(2, ()), np.random.default_rng(0))
    with pytest.raises(TrainingDivergence):
        optimizer_step(adam_init(p), p, [np.array([[np.nan], [0.0]]), np.zeros(1)])


def test_loss_decreases_on_regression():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(64, 4))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] * X[:, 2]
    p = mlp_init(MLPSpec(4, (32, 32)), rng)
    st = adam_init(p, lr=3e-3)

    def loss(p):
        return np.mean((mlp_forward(p, X) - y) ** 2)

    first = loss(p)
    for _ in range(100):
        r = mlp_forward(p, X) - y
        st, p = optimizer_step(st, p, mlp_backward(p, X, 2 * r / len(X)))
    assert loss(p) < 0.5 * first


def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    spec = MLPSpec(26, (8, 4), "tanh", 0.1)
    m = Model(mlp_init(spec, rng), "curvature", "sa2", 6, {"train_hash": "abc", "x": [1, 2]})
    save_model(m, tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    assert back.params.spec == spec
    assert back.task == "curvature" and back.group == "sa2" and back.window == 6
    assert back.meta == m.meta
    for a, b in zip(m.params.arrays(), back.params.arrays()):
        assert a.tobytes() == b.tobytes()
    x = rng.normal(size=26)
    assert back(x) == m(x)


def test_model_load_errors(tmp_path):
    with pytest.raises(OSError, match="nope.npz"):
        load_model(tmp_path / "nope.npz")
    bad = tmp_path / "bad.npz"
    np.savez(bad, a0=np.zeros(2))
    with pytest.raises(OSError, match="bad.npz"):
        load_model(bad)
