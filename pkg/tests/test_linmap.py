import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import central_differences, forward_loops, r2_direct, scatter_trace_ratio
from regequiv import linmap
from regequiv.dataset import DataError, ReferencePoint, RegressionDataset, Scaler, center, synth_generate
from regequiv.linmap import (
    LinearHead,
    MlpNetwork,
    fit_least_squares,
    fit_linear_head,
    forward,
    j4_gradient,
    j4_loss,
    load_model,
    pca,
    pca_project,
    predict,
    r2_score,
    save_model,
    scatter_stats,
    train_j4,
)


def random_batch(seed, n, m=12):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, n))
    z = rng.uniform(0.3, 2.0, size=m) * rng.choice([-1, 1], size=m)
    return x, z


def test_init_ranges_and_shapes():
    net = MlpNetwork.init((3, 4, 6), seed=1)
    assert [w.shape for w in net.weights] == [(4, 3), (6, 4)]
    assert np.all(np.abs(net.weights[0]) <= 1 / np.sqrt(3))
    assert np.all(np.abs(net.biases[1]) <= 1 / np.sqrt(4))
    again = MlpNetwork.init((3, 4, 6), seed=1)
    assert all(np.array_equal(a, b) for a, b in zip(net.params(), again.params()))


def test_network_validation():
    with pytest.raises(DataError):
        MlpNetwork((2,), [], [])
    with pytest.raises(DataError):
        MlpNetwork((2, 3), [np.zeros((2, 3))], [np.zeros(3)])


def test_forward_zero_net():
    net = MlpNetwork((2, 3, 4), [np.zeros((3, 2)), np.zeros((4, 3))], [np.zeros(3), np.zeros(4)])
    np.testing.assert_array_equal(forward(net, [0.7, -2.0]), np.zeros(4))


def test_forward_saturates():
    net = MlpNetwork((1, 1), [np.ones((1, 1))], [np.zeros(1)])
    assert forward(net, [50.0])[0] == pytest.approx(1.0, abs=1e-15)


def test_forward_matches_loops():
    net = MlpNetwork.init((3, 4, 6), seed=2)
    xs = np.random.default_rng(2).normal(size=(5, 3))
    batch = forward(net, xs)
    for x, row in zip(xs, batch):
        np.testing.assert_allclose(row, forward_loops(net.weights, net.biases, x), rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(forward(net, x), row, rtol=1e-15)


def test_forward_wrong_width():
    with pytest.raises(DataError):
        forward(MlpNetwork.init((2, 3)), [1.0, 2.0, 3.0])


def test_loss_zero_for_identical_images():
    # powers of two keep u = phi / z exact
    z = np.array([1.0, -2.0, 0.5])
    phi = z[:, None] * np.array([[0.25, -0.125]])
    assert j4_loss(phi, z) == 0.0


def test_loss_collapsed_means_hits_guard():
    # +1 images (1,0) and (-1,0): mean zero, within-class trace 1
    phi = np.array([[1.0, 0.0], [-1.0, 0.0]])
    z = np.ones(2)
    s = scatter_stats(phi, z)
    np.testing.assert_array_equal(s.mu_plus, [0.0, 0.0])
    assert s.sw_trace == 1.0 and s.sb_trace == 0.0
    assert j4_loss(phi, z, eps_div=1e-8) == pytest.approx(1e8)


def test_loss_matches_matrix_form():
    rng = np.random.default_rng(7)
    for _ in range(10):
        phi = rng.normal(size=(20, 4))
        z = rng.uniform(0.2, 3, 20) * rng.choice([-1, 1], 20)
        assert j4_loss(phi, z, 1e-8) == pytest.approx(scatter_trace_ratio(phi, z, 1e-8), rel=1e-12)


def test_mean_antisymmetry():
    phi, z = random_batch(0, 3)
    s = scatter_stats(phi, z)
    np.testing.assert_array_equal(s.mu_minus, -s.mu_plus)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_loss_nonnegative(seed, p):
    phi, z = random_batch(seed, p, m=int(np.random.default_rng(seed).integers(1, 30)))
    assert j4_loss(phi, z) >= 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100.0))
def test_loss_scale_invariant_without_guard(seed, gamma):
    phi, z = random_batch(seed, 3)
    assert j4_loss(gamma * phi, z, eps_div=0.0) == pytest.approx(j4_loss(phi, z, eps_div=0.0), rel=1e-10)


def test_gradient_zero_at_exact_minimum():
    z = np.array([1.0, -2.0, 0.5, 4.0])
    phi = z[:, None] * np.array([[0.25, -0.125, 0.5]])
    loss, g = linmap._j4_grad_phi(phi, z, 1e-8)
    assert loss == 0.0
    np.testing.assert_array_equal(g, 0.0)


def test_single_sample_gradient_zero():
    net = MlpNetwork.init((2, 3, 4), seed=3)
    loss, grads = j4_gradient(net, [[0.4, -0.2]], [1.3])
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


@pytest.mark.parametrize("arch,seed", [((1, 5, 10), s) for s in range(3)] + [((3, 4, 6), s) for s in range(3)])
def test_gradient_finite_differences(arch, seed):
    net = MlpNetwork.init(arch, seed=seed)
    x, z = random_batch(100 + seed, arch[0], m=15)
    _, grads = j4_gradient(net, x, z)
    fd = central_differences(lambda: j4_loss(forward(net, x), z), net.params())
    for g, f in zip(grads, fd):
        mask = np.abs(g) >= 1e-8
        rel = np.abs(g[mask] - f[mask]) / np.maximum(np.abs(g[mask]), np.abs(f[mask]))
        assert np.all(rel < 1e-4)


def test_gradient_order_matches_params():
    net = MlpNetwork.init((2, 3, 4), seed=0)
    _, grads = j4_gradient(net, *random_batch(0, 2))
    assert [g.shape for g in grads] == [p.shape for p in net.params()]


def small_problem(seed=0, m=200):
    ds = synth_generate("square", m, (-2, 3), 0.3, seed)
    return center(ds)[0]


def test_training_decreases_loss_and_is_deterministic():
    ds = small_problem()
    a = train_j4(ds, epochs=300, seed=5)
    b = train_j4(ds, epochs=300, seed=5)
    assert a.loss_trace == b.loss_trace
    assert a.loss_trace[-1] < a.loss_trace[0]
    assert len(a.loss_trace) == 300


def test_training_callback_sees_every_epoch():
    seen = []
    train_j4(small_problem(), epochs=5, callback=lambda e, net, loss: seen.append(e))
    assert seen == [1, 2, 3, 4, 5]


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"epochs": 0}, "epochs"),
        ({"lr": 0.0}, "learning rate"),
        ({"arch": (2, 5)}, "architecture"),
        ({"tau": 1e9}, "tau"),
    ],
)
def test_training_errors(kwargs, match):
    with pytest.raises(DataError, match=match):
        train_j4(small_problem(), **kwargs)


def test_training_reports_divergence_epoch(monkeypatch):
    real = linmap.j4_gradient
    calls = {"n": 0}

    def flaky(net, x, z, eps_div):
        calls["n"] += 1
        loss, g = real(net, x, z, eps_div)
        return (float("nan") if calls["n"] == 3 else loss), g

    monkeypatch.setattr(linmap, "j4_gradient", flaky)
    with pytest.raises(linmap.TrainingError, match="epoch 3"):
        train_j4(small_problem(), epochs=10)


def test_training_deadline():
    with pytest.raises(linmap.TimeLimitExceeded):
        train_j4(small_problem(), epochs=10_000, deadline=0.0)


def identity_net():
    return MlpNetwork((1, 1), [np.ones((1, 1))], [np.zeros(1)])


def test_head_on_exact_linear_features():
    # phi = x fed straight through by fitting on raw features
    x = np.linspace(-1, 1, 30)
    w = fit_least_squares(x[:, None], 3 * x)
    assert w[0] == pytest.approx(3.0, rel=1e-9)
    assert r2_score(3 * x, x * w[0]) == pytest.approx(1.0, abs=1e-12)


def test_head_constant_features():
    z = np.random.default_rng(0).normal(size=40)
    z -= z.mean()
    w = fit_least_squares(np.ones((40, 1)), z)
    assert r2_score(z, np.ones(40) * w[0]) == pytest.approx(0.0, abs=1e-12)


def test_r2_matches_direct_and_guards_constant():
    rng = np.random.default_rng(1)
    z, p = rng.normal(size=30), rng.normal(size=30)
    assert r2_score(z, p) == pytest.approx(r2_direct(z, p), rel=1e-13)
    assert r2_score(np.ones(5), np.zeros(5)) == 0.0


def test_head_residual_orthogonal():
    rng = np.random.default_rng(2)
    phi = rng.normal(size=(100, 6))
    z = phi @ rng.normal(size=6) + 0.1 * rng.normal(size=100)
    w = fit_least_squares(phi, z)
    r = z - phi @ w
    assert np.linalg.norm(phi.T @ r) <= 1e-8 * np.linalg.norm(phi.T @ z)


def test_head_rank_deficient():
    phi = np.ones((10, 3))
    z = np.arange(10.0) - 4.5
    assert np.all(np.isfinite(fit_least_squares(phi, z)))


def test_fit_linear_head_uses_network():
    ds = center(synth_generate("linear", 50, (-0.5, 0.5), 0, seed=0))[0]
    head = fit_linear_head(identity_net(), ds)
    phi = np.tanh(ds.features[:, 0])
    assert head.w[0] == pytest.approx((phi @ ds.targets) / (phi @ phi), rel=1e-8)
    assert 0.99 < head.train_r2 <= 1.0


def test_predict_composition():
    net = MlpNetwork.init((2, 3, 4), seed=9)
    head = LinearHead(np.array([0.5, -1.0, 2.0, 0.25]), 0.0, 1.0)
    ref = ReferencePoint([0.3, -0.7], 1.5)
    # at x = x0 the network sees the origin
    expect = head.w @ forward_loops(net.weights, net.biases, [0.0, 0.0]) + 1.5
    assert predict(net, head, ref, [0.3, -0.7]) == pytest.approx(expect, rel=1e-13)
    xs = np.random.default_rng(0).normal(size=(4, 2))
    batch = predict(net, head, ref, xs)
    for x, b in zip(xs, batch):
        assert b == pytest.approx(predict(net, head, ref, x), rel=1e-14)


def test_predict_with_scaler():
    net = MlpNetwork.init((1, 2), seed=1)
    head = LinearHead(np.array([1.0, 1.0]), 0.0, 1.0)
    ref = ReferencePoint([0.0], 0.0)
    sc = Scaler(np.array([2.0]), np.array([4.0]))
    assert predict(net, head, ref, [6.0], sc) == pytest.approx(predict(net, head, ref, [1.0]))


def test_pca_rank_one_reconstruction():
    t = np.random.default_rng(3).normal(size=50)
    direction = np.array([1.0, -2.0, 0.5])
    phi = 4.0 + t[:, None] * direction
    proj, vals, vecs = pca(phi, 1)
    recon = phi.mean(axis=0) + proj @ vecs.T
    np.testing.assert_allclose(recon, phi, atol=1e-10)
    assert vecs[np.abs(vecs[:, 0]).argmax(), 0] > 0


def test_pca_isotropic_eigenvalues():
    phi = np.random.default_rng(4).normal(size=(20000, 3))
    _, vals, _ = pca(phi, 3)
    assert vals[0] - vals[-1] < 0.06
    assert np.all(np.diff(vals) <= 0)


def test_pca_full_rank_preserves_distances():
    phi = np.random.default_rng(5).normal(size=(30, 4))
    proj = pca_project(phi, 4)
    d1 = np.linalg.norm(phi[:, None] - phi[None], axis=-1)
    d2 = np.linalg.norm(proj[:, None] - proj[None], axis=-1)
    np.testing.assert_allclose(d1, d2, atol=1e-10)


def test_pca_bad_k():
    with pytest.raises(DataError):
        pca(np.zeros((3, 2)), 3)


def test_model_round_trip(tmp_path):
    ds = small_problem(m=80)
    net = train_j4(ds, epochs=20)
    head = fit_linear_head(net, ds)
    ref = ReferencePoint([0.5], 2.0)
    sc = Scaler(np.array([1.0]), np.array([2.0]))
    path = tmp_path / "m.json"
    save_model(path, net, head, ref, sc, {"seed": 42})
    net2, head2, ref2, sc2, meta = load_model(path)
    x = np.linspace(-1, 1, 7)[:, None]
    np.testing.assert_array_equal(predict(net, head, ref, x, sc), predict(net2, head2, ref2, x, sc2))
    assert meta == {"seed": 42}
    doc = json.loads(path.read_text())
    assert doc["layer_dims"] == [1, 5, 10] and len(doc["weights"][0]) == 5


def test_model_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(DataError, match="not a"):
        load_model(p)
    p.write_text(json.dumps({"format": linmap.MODEL_FORMAT, "version": 99}))
    with pytest.raises(DataError, match="version"):
        load_model(p)
