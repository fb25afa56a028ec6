import numpy as np
import pytest
from hypothesis import given, strategies as st

from lobrnn.baselines import (
    PENALTY_GRID,
    FfwdNet,
    LogisticConfig,
    OvrLogistic,
    WhiteNoise,
    ffwd_config,
    ffwd_forward,
    ffwd_grad,
    ffwd_init,
    fit_binary_elastic_net,
    logistic_smooth_gradient,
    logistic_smooth_objective,
    soft_threshold,
    train_ffwd,
    train_ovr_logistic,
    white_noise_predict,
)
from lobrnn.eval.metrics import auc_score, confusion
from lobrnn.rnn.model import forward_batch, glorot_init
from lobrnn.rnn.training import TrainConfig, train
from oracles import central_difference


def logistic_problem(rng, n=200, d=6):
    X = rng.normal(size=(n, d))
    w = np.array([2.0, -1.5, 0.0, 0.0, 0.5, 0.0])[:d]
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ w)))).astype(float)
    return X, y


def three_class(rng, n=300, d=4):
    X = rng.normal(size=(n, 1, d))
    s = X[:, 0, 0] + 0.3 * rng.normal(size=n)
    y = np.where(s > 0.6, 1, np.where(s < -0.6, -1, 0))
    return X, y


class TestElasticNet:
    def test_soft_threshold(self):
        np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.5, 0.2, -2.0]), 1.0), [2.0, -0.0, 0.0, -1.0])

    def test_smooth_gradient_matches_finite_differences(self, rng):
        X, y = logistic_problem(rng, 40)
        w = rng.normal(size=6)
        box = {"w": w, "b": np.array([0.3])}
        gw, gb = logistic_smooth_gradient(w, 0.3, X, y, 0.2, 0.4)
        num = central_difference(lambda: logistic_smooth_objective(box["w"], box["b"][0], X, y, 0.2, 0.4), box)
        np.testing.assert_allclose(gw, num["w"], rtol=1e-6, atol=1e-9)
        assert gb == pytest.approx(num["b"][0], rel=1e-6)

    def test_optimality_conditions_full_batch(self, rng):
        X, y = logistic_problem(rng)
        lam, alpha = 0.05, 0.5
        cfg = LogisticConfig(epochs=3000, batch_size=len(y), lr0=0.5, lr_decay=1.0)
        w, b = fit_binary_elastic_net(X, y, lam, alpha, cfg, np.random.default_rng(0))
        gw, gb = logistic_smooth_gradient(w, b, X, y, lam, alpha)
        active = w != 0
        assert abs(gb) < 1e-10
        assert np.abs(gw[active] + lam * alpha * np.sign(w[active])).max() < 1e-8
        assert np.all(np.abs(gw[~active]) <= lam * alpha + 1e-10)
        # truly relevant inputs keep the sign of the generating weights
        assert w[0] > 0 and w[1] < 0
        assert active.sum() < len(w)

    def test_heavier_penalty_is_sparser(self, rng):
        X, y = logistic_problem(rng)
        cfg = LogisticConfig(epochs=300, batch_size=len(y), lr0=0.5, lr_decay=1.0)
        nnz = [
            np.count_nonzero(fit_binary_elastic_net(X, y, lam, 1.0, cfg, np.random.default_rng(0))[0])
            for lam in (0.001, 0.05, 0.5)
        ]
        assert nnz[0] >= nnz[1] >= nnz[2]
        assert nnz[2] == 0

    def test_ovr_grid_search_and_decisions(self, rng):
        X, y = three_class(rng)
        Xv, yv = three_class(rng, 150)
        m = train_ovr_logistic((X, y), (Xv, yv), seed=3, config=LogisticConfig(epochs=20, batch_size=50))
        assert isinstance(m, OvrLogistic)
        assert set(m.meta["grid_val_loss"]) == {repr(v) for v in PENALTY_GRID}
        assert m.lam in PENALTY_GRID
        probs = m.predict_proba(Xv)
        assert probs.shape == (150, 3) and np.all((probs > 0) & (probs < 1))
        assert confusion(m.predict(Xv), yv).f1.mean() > 0.6

    def test_fixed_penalty_and_determinism(self, rng):
        X, y = three_class(rng)
        cfg = LogisticConfig(epochs=5, batch_size=32)
        a = train_ovr_logistic((X, y), None, penalty=(0.01, 0.5), seed=2, config=cfg)
        b = train_ovr_logistic((X, y), None, penalty=(0.01, 0.5), seed=2, config=cfg)
        np.testing.assert_array_equal(a.W, b.W)
        assert (a.lam, a.alpha) == (0.01, 0.5)

    def test_grid_needs_validation(self, rng):
        X, y = three_class(rng, 30)
        with pytest.raises(ValueError):
            train_ovr_logistic((X, y), None, config=LogisticConfig(epochs=1))


class TestFfwd:
    def test_init_and_shapes(self):
        m = ffwd_init(12, (7, 5), 3, seed=1)
        assert m.dims == (12, 7, 5, 3)
        assert m.param_names == ("W0", "W1", "W2", "b0", "b1", "b2")
        assert m.W1 is m.weights[1] and m.b2 is m.biases[2]
        with pytest.raises(AttributeError):
            m.Q1

    def test_gradient_matches_finite_differences(self, rng):
        m = ffwd_init(6, (5, 4), 3, seed=2)
        for b in m.biases:
            b[:] = 0.1 * rng.normal(size=b.shape)
        X = rng.normal(size=(8, 6))
        y = rng.integers(-1, 2, 8)
        _, g = ffwd_grad(m, X, y, l2=0.03)
        num = central_difference(lambda: ffwd_grad(m, X, y, l2=0.03)[0], m.params())
        for n in m.param_names:
            np.testing.assert_allclose(g[n], num[n], rtol=1e-5, atol=1e-9)

    def test_shares_first_layer_with_rnn(self):
        rnn = glorot_init(32, 20, 3, seed=5)
        ff = ffwd_init(32, (20,), 3, seed=5)
        np.testing.assert_array_equal(rnn.W_h, ff.W0)
        np.testing.assert_array_equal(rnn.W_y, ff.W1)

    def test_rnn_without_recurrence_equals_single_layer_net(self, rng):
        X, y = three_class(rng, 200, 8)
        Xv, yv = three_class(rng, 60, 8)
        cfg = TrainConfig(T=1, epochs=25, batch_size=32, lr0=0.05, l2=0.01, hidden=10, seed=4, freeze_recurrent=True)
        rnn, h_rnn = train((X, y), (Xv, yv), cfg)
        ff, h_ff = train_ffwd((X, y), (Xv, yv), cfg, hidden=(10,))
        np.testing.assert_allclose(forward_batch(rnn, Xv)[3], ff.predict_proba(Xv), rtol=0, atol=1e-10)
        np.testing.assert_allclose(h_rnn.val_loss, h_ff.val_loss, rtol=0, atol=1e-10)

    def test_default_config(self):
        cfg = ffwd_config(epochs=3)
        assert (cfg.lr0, cfg.l2, cfg.epochs) == (0.01, 0.1, 3)

    def test_forward_returns_all_activations(self, rng):
        m = ffwd_init(4, (3, 2), 3)
        acts = ffwd_forward(m, rng.normal(size=(5, 4)))
        assert [a.shape for a in acts] == [(5, 4), (5, 3), (5, 3), (5, 2), (5, 2), (5, 3)]

    def test_copy_is_deep(self):
        m = ffwd_init(4, (3,), 3)
        c = m.copy()
        c.W0[0, 0] += 1
        assert m.W0[0, 0] != c.W0[0, 0]
        assert isinstance(c, FfwdNet)


class TestWhiteNoise:
    def test_recall_near_one_third(self, rng):
        y = rng.choice([-1, 0, 1], size=30000, p=[0.05, 0.9, 0.05])
        preds, probs = white_noise_predict(7, len(y))
        m = confusion(preds, y)
        np.testing.assert_allclose(m.recall, 1 / 3, atol=0.03)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_auc_near_half(self, rng):
        y = rng.random(20000) < 0.05
        _, probs = white_noise_predict(3, len(y))
        assert abs(auc_score(probs[:, 2], y) - 0.5) < 0.03

    def test_model_ignores_input(self):
        w = WhiteNoise(seed=4)
        a = w.predict_proba(np.zeros((10, 2, 3)))
        b = w.predict_proba(np.ones((10, 2, 3)))
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(w.predict(np.zeros((10, 1))), white_noise_predict(4, 10)[0])

    @given(st.integers(0, 5))
    def test_empty(self, seed):
        preds, probs = white_noise_predict(seed, 0)
        assert preds.shape == (0,) and probs.shape == (0, 3)
