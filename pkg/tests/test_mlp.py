import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adjsurrogate import mlp
from adjsurrogate.dataset import TrainingSet
from adjsurrogate.errors import MissingAdjointData
from adjsurrogate.mlp import AdjNetParams, LossSpec, MlpParams
from adjsurrogate.smallmat import RngStream

from conftest import random_net


def test_parameter_counts():
    assert mlp.N_PARAMS == 178
    assert mlp.N_ADJ_PARAMS == 175
    rng = RngStream(0)
    assert MlpParams.init(rng).flatten().shape == (178,)
    assert AdjNetParams.init(rng).flatten().shape == (175,)


def test_forward_trivial():
    u = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(mlp.forward(MlpParams.zeros(), u), np.zeros(3))
    p = MlpParams.zeros()
    p.b2 = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(mlp.forward(p, u), [1.0, 2.0, 3.0])
    q = random_net(RngStream(1))
    q.W2[:] = 0.0
    assert np.array_equal(mlp.forward(q, u), q.b2)


def test_jacobian_trivial():
    p = random_net(RngStream(2))
    p.W1[:] = 0.0
    assert np.array_equal(mlp.jacobian(p, np.ones(3)), np.zeros((3, 3)))
    assert np.array_equal(mlp.jacobian_t_vec(p, np.ones(3), np.ones(3)), np.zeros(3))
    p = random_net(RngStream(2))
    p.b1[:] = 20.0
    J = mlp.jacobian(p, np.zeros(3) + 0.01)
    assert np.all(np.abs(J) <= 1e-15 * np.linalg.norm(p.W2) * np.linalg.norm(p.W1))


def _fd_input_jacobian(p, u, h=1e-6):
    return np.column_stack([(mlp.forward(p, u + e) - mlp.forward(p, u - e)) / (2 * h) for e in h * np.eye(3)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_jacobian_finite_differences(seed, u):
    p = random_net(RngStream(seed))
    u = np.array(u)
    J = mlp.jacobian(p, u)
    assert np.linalg.norm(J - _fd_input_jacobian(p, u)) <= 1e-6 * max(np.linalg.norm(J), 1e-3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_jacobian_t_vec_dense(seed):
    rng = RngStream(seed)
    p = random_net(rng)
    u, v = rng.standard_normal(3), rng.standard_normal(3)
    assert np.max(np.abs(mlp.jacobian_t_vec(p, u, v) - mlp.jacobian(p, u).T @ v)) <= 1e-14
    assert np.array_equal(mlp.jacobian_t_vec(p, u, np.zeros(3)), np.zeros(3))


def test_batched_matches_single():
    rng = RngStream(3)
    p = random_net(rng)
    U = rng.standard_normal((4, 3))
    assert np.allclose(mlp.forward(p, U), [mlp.forward(p, u) for u in U], atol=1e-15)
    assert np.allclose(mlp.jacobian(p, U), [mlp.jacobian(p, u) for u in U], atol=1e-15)


def test_adjnet():
    rng = RngStream(4)
    theta = random_net(rng)
    phi = AdjNetParams.from_mlp(theta)
    u = rng.standard_normal(3)
    assert np.array_equal(mlp.adjnet_forward(phi, u), mlp.jacobian(theta, u))
    assert np.allclose(mlp.adjnet_adjoint(phi, u), mlp.jacobian(theta, u).T, atol=0)
    v = rng.standard_normal(3)
    assert np.allclose(mlp.adjnet_adjoint_vec(phi, u, v), mlp.adjnet_adjoint(phi, u) @ v, atol=1e-14)
    phi.W1[:] = 0.0
    assert np.array_equal(mlp.adjnet_forward(phi, u), np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(-1e3, 1e3))
def test_adjnet_saturation_bound(seed, scale):
    rng = RngStream(seed)
    phi = AdjNetParams.init(rng)
    out = mlp.adjnet_forward(phi, scale * rng.standard_normal(3))
    bound = np.abs(phi.W2).sum(axis=1).max() * np.abs(phi.W1).sum(axis=1).max()
    assert np.all(np.isfinite(out))
    assert np.all(np.abs(out) <= bound)


def _batch(rng, n=5):
    X = 5 * rng.standard_normal((n, 3))
    MT = rng.standard_normal((n, 3, 3))
    V = rng.standard_normal((n, 3))
    return TrainingSet(X, 3 * rng.standard_normal((n, 3)), MT, V, np.einsum("bij,bj->bi", MT, V))


def test_loss_perfect_fit():
    rng = RngStream(5)
    p = random_net(rng)
    b = _batch(rng)
    b.Y = mlp.forward(p, b.X)
    loss, g = mlp.loss_value_and_param_grad(LossSpec("Standard"), p, b)
    assert loss == pytest.approx(0.0, abs=1e-28)
    assert np.max(np.abs(g)) <= 1e-13


def test_adj_loss_alpha_zero_is_standard():
    rng = RngStream(6)
    p = random_net(rng)
    b = _batch(rng)
    ls, gs = mlp.loss_value_and_param_grad(LossSpec("Standard"), p, b)
    la, ga = mlp.loss_value_and_param_grad(LossSpec("Adj", 0.0), p, b)
    assert abs(ls - la) <= 1e-14 * max(1.0, ls)
    assert np.allclose(gs, ga, atol=1e-14)


def test_loss_records_and_errors():
    rng = RngStream(7)
    p = random_net(rng)
    b = _batch(rng)
    l1, g1 = mlp.loss_value_and_param_grad(LossSpec("AdjVec", 0.1), p, b)
    l2, g2 = mlp.loss_value_and_param_grad(LossSpec("AdjVec", 0.1), p.flatten(), b.records())
    assert l1 == l2 and np.array_equal(g1, g2)
    with pytest.raises(MissingAdjointData):
        mlp.loss_value_and_param_grad(LossSpec("Adj", 1.0), p, TrainingSet(b.X, b.Y))
    with pytest.raises(MissingAdjointData):
        mlp.loss_value_and_param_grad(LossSpec("IndepAdjVec"), AdjNetParams.from_mlp(p), TrainingSet(b.X, b.Y, b.MT))
    with pytest.raises(ValueError):
        mlp.loss_value_and_param_grad(LossSpec("IndepAdj"), p, b)
    with pytest.raises(ValueError):
        LossSpec("Nope")
    with pytest.raises(ValueError):
        LossSpec("Adj", -1.0)


def test_frobenius_transposed_form():
    # ||J^T - M^T||_F^2 equals ||J - M||_F^2; the loss relies on it
    rng = RngStream(8)
    for _ in range(100):
        p = random_net(rng)
        u = rng.standard_normal(3)
        J = mlp.jacobian(p, u)
        MT = rng.standard_normal((3, 3))
        a = np.sum((J.T - MT) ** 2)
        b = np.sum((J - MT.T) ** 2)
        assert abs(a - b) <= 1e-14 * max(1.0, a)


def fd_loss_gradient(spec, theta, batch, h=1e-6):
    g = np.empty_like(theta)
    for i in range(theta.shape[0]):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        g[i] = (mlp._loss_grad(spec.kind, spec.alpha, tp, batch)[0]
                - mlp._loss_grad(spec.kind, spec.alpha, tm, batch)[0]) / (2 * h)
    return g


SPECS = [LossSpec("Standard"), LossSpec("Adj", 100 / 3), LossSpec("AdjVec", 0.5),
         LossSpec("IndepFwd"), LossSpec("IndepAdj"), LossSpec("IndepAdjVec")]


def loss_gradient_errors(draws=100, seed=9):
    """Worst relative error of the analytic loss gradient over ``draws`` (theta, batch) pairs per loss."""
    rng = RngStream(seed)
    worst = {}
    for spec in SPECS:
        errs = []
        for _ in range(draws):
            theta = random_net(rng).flatten()[:spec.n_params]
            b = _batch(rng)
            _, g = mlp.loss_value_and_param_grad(spec, theta, b)
            fd = fd_loss_gradient(spec, theta, b)
            errs.append(np.linalg.norm(g - fd) / np.linalg.norm(g))
        worst[spec.kind] = max(errs)
    return worst


def test_loss_gradients_finite_differences():
    worst = loss_gradient_errors(draws=20)
    assert all(v <= 1e-5 for v in worst.values()), worst


def test_params_json_roundtrip():
    rng = RngStream(10)
    p = random_net(rng)
    text = mlp.params_to_json(p, seed=3, extra={"method": "Adj"})
    env = json.loads(text)
    assert env["architecture"] == mlp.MLP_TAG and env["n_params"] == 178 and env["seed"] == 3
    assert np.array_equal(mlp.params_from_json(text).flatten(), p.flatten())
    phi = AdjNetParams.init(rng)
    back = mlp.params_from_json(mlp.params_to_json(phi))
    assert isinstance(back, AdjNetParams) and np.array_equal(back.flatten(), phi.flatten())
    env["n_params"] = 5
    with pytest.raises(ValueError):
        mlp.params_from_json(json.dumps(env))
