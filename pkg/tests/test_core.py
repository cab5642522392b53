import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedstlf.core import (AdamState, AttentionWeights, ConfigurationError, ContractError,
                          DimensionError, EmptySequenceError, NumericError, Tape, Tensor,
                          adam_update, add, avg_pool1d, backprop, batch_norm, conv1d, dense,
                          dropout, finite_difference_check, layer_norm, lstm, mse_loss,
                          multi_head_attention, relu)


def T(a):
    return Tensor(np.array(a, dtype=np.float64), requires_grad=True)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_oracle(x, w, u, b):
    """Step-by-step LSTM written out gate by gate."""
    batch, steps, _ = x.shape
    c = u.shape[0]
    h = np.zeros((batch, c))
    cell = np.zeros((batch, c))
    seq = []
    for t in range(steps):
        z = x[:, t] @ w + h @ u + b
        i, f, g, o = (z[:, k * c:(k + 1) * c] for k in range(4))
        cell = sigmoid(f) * cell + sigmoid(i) * np.tanh(g)
        h = sigmoid(o) * np.tanh(cell)
        seq.append(h)
    return np.stack(seq, axis=1)


def attention_oracle(q_in, k_in, v_in, p, heads, size):
    q = q_in @ p.wq.data + p.bq.data
    k = k_in @ p.wk.data + p.bk.data
    v = v_in @ p.wv.data + p.bv.data
    out = np.zeros(q.shape)
    for b in range(q.shape[0]):
        for hd in range(heads):
            sl = slice(hd * size, (hd + 1) * size)
            s = q[b, :, sl] @ k[b, :, sl].T / np.sqrt(size)
            s = np.exp(s - s.max(axis=1, keepdims=True))
            s /= s.sum(axis=1, keepdims=True)
            out[b, :, sl] = s @ v[b, :, sl]
    return out @ p.wo.data + p.bo.data


def attention_params(rng, d_q, d_kv, width):
    shapes = [(d_q, width), (width,), (d_kv, width), (width,), (d_kv, width), (width,),
              (width, width), (width,)]
    return AttentionWeights(*(T(rng.normal(0, 0.5, s)) for s in shapes))


class TestTape:
    def test_non_scalar_loss_is_rejected(self):
        x = T([1.0, 2.0])
        with Tape() as tape:
            y = relu(x)
        with pytest.raises(ContractError):
            backprop(tape, y)

    def test_add_shape_mismatch(self):
        with pytest.raises(DimensionError):
            add(T([1.0]), T([1.0, 2.0]))

    def test_gradient_accumulates_over_reuse(self):
        x = T([3.0])
        with Tape() as tape:
            y = mse_loss(add(x, x), np.zeros(1))
        backprop(tape, y)
        assert x.grad[0] == pytest.approx(2 * 2 * 6.0)

    def test_no_tape_no_recording(self):
        x = T([1.0])
        y = relu(x)
        assert y.data[0] == 1.0


class TestForwardOracles:
    def test_dense_matches_loops(self, rng):
        x, w, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5)), rng.normal(size=5)
        want = np.zeros((2, 3, 5))
        for i in range(2):
            for t in range(3):
                for o in range(5):
                    want[i, t, o] = max(0.0, sum(x[i, t, k] * w[k, o] for k in range(4)) + b[o])
        got = dense(T(x), T(w), T(b), "relu").data
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_dense_rejects_bad_shapes_and_activation(self, rng):
        with pytest.raises(DimensionError):
            dense(T(np.ones((2, 3))), T(np.ones((4, 5))), T(np.ones(5)))
        with pytest.raises(ConfigurationError):
            dense(T(np.ones((2, 4))), T(np.ones((4, 5))), T(np.ones(5)), "gelu")

    def test_lstm_matches_gate_by_gate_oracle(self, backend, rng):
        x = rng.normal(size=(3, 7, 4))
        w, u, b = rng.normal(0, 0.4, (4, 20)), rng.normal(0, 0.4, (5, 20)), rng.normal(0, 0.1, 20)
        want = lstm_oracle(x, w, u, b)
        got = lstm(T(x), T(w), T(u), T(b), return_sequences=True).data
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-13)
        last = lstm(T(x), T(w), T(u), T(b), return_sequences=False).data
        np.testing.assert_allclose(last, want[:, -1], rtol=0, atol=1e-13)

    def test_lstm_empty_sequence(self, rng):
        with pytest.raises(EmptySequenceError):
            lstm(T(np.zeros((1, 0, 2))), T(np.zeros((2, 4))), T(np.zeros((1, 4))), T(np.zeros(4)))

    def test_attention_matches_per_head_loops(self, rng):
        q, kv = rng.normal(size=(2, 5, 6)), rng.normal(size=(2, 4, 3))
        p = attention_params(rng, 6, 3, 8)
        got = multi_head_attention(T(q), T(kv), T(kv), p, heads=2, head_size=4).data
        np.testing.assert_allclose(got, attention_oracle(q, kv, kv, p, 2, 4), atol=1e-12)

    def test_attention_scores_are_distributions(self, rng):
        x = rng.normal(size=(2, 5, 8))
        p = attention_params(rng, 8, 8, 8)
        _, scores = multi_head_attention(T(x), T(x), T(x), p, 2, 4, return_scores=True)
        assert scores.shape == (2, 2, 5, 5)
        np.testing.assert_allclose(scores.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(scores >= 0)

    def test_attention_errors(self, rng):
        p = attention_params(rng, 8, 8, 8)
        with pytest.raises(EmptySequenceError):
            multi_head_attention(T(np.ones((1, 2, 8))), T(np.ones((1, 0, 8))),
                                 T(np.ones((1, 0, 8))), p, 2, 4)
        with pytest.raises(DimensionError):
            multi_head_attention(T(np.ones((1, 2, 5))), T(np.ones((1, 3, 8))),
                                 T(np.ones((1, 3, 8))), p, 2, 4)

    def test_layer_norm(self, rng):
        x = rng.normal(3.0, 2.0, size=(2, 4, 6))
        y = layer_norm(T(x), T(np.ones(6)), T(np.zeros(6))).data
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.var(axis=-1), 1.0, atol=1e-4)

    def test_batch_norm_training_and_running_stats(self, rng):
        x = rng.normal(2.0, 3.0, size=(4, 5, 3))
        rm, rv = np.zeros(3), np.ones(3)
        y = batch_norm(T(x), T(np.ones(3)), T(np.zeros(3)), rm, rv, training=True).data
        np.testing.assert_allclose(y.mean(axis=(0, 1)), 0.0, atol=1e-12)
        mu, var = x.mean(axis=(0, 1)), x.var(axis=(0, 1))
        np.testing.assert_allclose(rm, 0.01 * mu, atol=1e-15)
        np.testing.assert_allclose(rv, 0.99 + 0.01 * var, atol=1e-15)
        frozen = batch_norm(T(x), T(np.ones(3)), T(np.zeros(3)), rm, rv, training=False).data
        np.testing.assert_allclose(frozen, (x - rm) / np.sqrt(rv + 1e-3), atol=1e-12)

    def test_conv1d_matches_direct_loops(self, rng):
        x, k, b = rng.normal(size=(2, 6, 3)), rng.normal(size=(3, 3, 4)), rng.normal(size=4)
        xp = np.pad(x, ((0, 0), (1, 1), (0, 0)))
        want = np.zeros((2, 6, 4))
        for i in range(2):
            for t in range(6):
                for o in range(4):
                    want[i, t, o] = b[o] + sum(xp[i, t + d, c] * k[d, c, o]
                                               for d in range(3) for c in range(3))
        np.testing.assert_allclose(conv1d(T(x), T(k), T(b)).data, want, atol=1e-12)

    def test_conv1d_errors(self):
        with pytest.raises(ConfigurationError):
            conv1d(T(np.ones((1, 5, 2))), T(np.ones((2, 2, 3))), T(np.ones(3)))
        with pytest.raises(ConfigurationError):
            conv1d(T(np.ones((1, 2, 2))), T(np.ones((3, 2, 3))), T(np.ones(3)))

    def test_avg_pool(self, rng):
        x = rng.normal(size=(2, 5, 3))
        np.testing.assert_allclose(avg_pool1d(T(x)).data, x.mean(axis=1), atol=1e-15)

    def test_dropout_modes(self, rng):
        x = T(np.ones((200, 50)))
        assert dropout(x, 0.2, training=False, rng=None) is x
        y = dropout(x, 0.2, training=True, rng=np.random.default_rng(1)).data
        kept = y > 0
        assert set(np.unique(y)) <= {0.0, 1.25}
        assert abs(kept.mean() - 0.8) < 0.02
        with pytest.raises(ConfigurationError):
            dropout(x, 1.0, True, rng)

    def test_mse(self):
        assert mse_loss(T([1.0, 3.0]), [0.0, 0.0]).item() == 5.0
        with pytest.raises(DimensionError):
            mse_loss(T([1.0]), [1.0, 2.0])


def _check(forward, params, n=40):
    return finite_difference_check(forward, params, n_coords=n, rng=np.random.default_rng(3))


class TestPrimitiveGradients:
    def test_dense_activations(self, rng):
        x, w, b = T(rng.normal(size=(3, 4))), T(rng.normal(size=(4, 2))), T(rng.normal(size=2))
        y = rng.normal(size=(3, 2))
        for act in ("none", "relu", "tanh"):
            assert _check(lambda: mse_loss(dense(x, w, b, act), y), [x, w, b]) < 1e-6

    def test_lstm(self, backend, rng):
        x = T(rng.normal(size=(2, 6, 3)))
        w, u, b = T(rng.normal(0, .5, (3, 16))), T(rng.normal(0, .5, (4, 16))), T(rng.normal(0, .1, 16))
        y = rng.normal(size=(2, 6, 4))
        assert _check(lambda: mse_loss(lstm(x, w, u, b, True), y), [x, w, u, b], 64) < 1e-6
        y2 = rng.normal(size=(2, 4))
        assert _check(lambda: mse_loss(lstm(x, w, u, b, False), y2), [x, w, u, b], 64) < 1e-6

    def test_attention(self, rng):
        q, kv = T(rng.normal(size=(2, 4, 6))), T(rng.normal(size=(2, 5, 3)))
        p = attention_params(rng, 6, 3, 4)
        y = rng.normal(size=(2, 4, 4))
        loss = lambda: mse_loss(multi_head_attention(q, kv, kv, p, 2, 2), y)  # noqa: E731
        # the key bias shifts every score of a query equally, so softmax makes
        # its true gradient zero; central differences only see round-off there
        checked = [q, kv, p.wq, p.bq, p.wk, p.wv, p.bv, p.wo, p.bo]
        assert _check(loss, checked, 64) < 1e-6
        with Tape() as tape:
            out = loss()
        backprop(tape, out)
        assert np.abs(p.bk.grad).max() < 1e-14

    def test_norms_conv_pool(self, rng):
        x = T(rng.normal(size=(3, 5, 4)))
        g, b = T(rng.normal(1, .2, 4)), T(rng.normal(0, .2, 4))
        k, kb = T(rng.normal(size=(3, 4, 2))), T(rng.normal(size=2))
        y = rng.normal(size=(3, 2))

        def loss():
            h = layer_norm(x, g, b)
            h = batch_norm(h, g, b, np.zeros(4), np.ones(4), training=True)
            return mse_loss(avg_pool1d(relu(conv1d(h, k, kb))), y)

        assert _check(loss, [x, g, b, k, kb], 64) < 1e-6


class TestAdam:
    def test_first_two_steps_match_formula(self, rng):
        p = rng.normal(size=5)
        g1, g2 = rng.normal(size=5), rng.normal(size=5)
        state = AdamState.for_arrays([p], learning_rate=0.01)
        want = p.copy()
        m = 0.1 * g1
        v = 0.001 * g1 * g1
        want -= 0.01 * (m / 0.1) / (np.sqrt(v / 0.001) + 1e-8)
        m2 = 0.9 * m + 0.1 * g2
        v2 = 0.999 * v + 0.001 * g2 * g2
        want2 = want - 0.01 * (m2 / (1 - 0.9 ** 2)) / (np.sqrt(v2 / (1 - 0.999 ** 2)) + 1e-8)
        adam_update([p], [g1], state)
        np.testing.assert_allclose(p, want, rtol=1e-14)
        adam_update([p], [g2], state)
        np.testing.assert_allclose(p, want2, rtol=1e-14)
        assert state.step == 2

    def test_non_finite_gradient_leaves_state_untouched(self):
        p = np.ones(3)
        state = AdamState.for_arrays([p])
        with pytest.raises(NumericError):
            adam_update([p], [np.array([1.0, np.nan, 0.0])], state)
        assert state.step == 0 and np.all(p == 1.0) and np.all(state.first_moment[0] == 0)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8))
    def test_first_step_size_bounded_by_learning_rate(self, grads):
        g = np.array(grads)
        p = np.zeros_like(g)
        adam_update([p], [g], AdamState.for_arrays([p]))
        assert np.all(np.abs(p) <= 1e-3 * (1 + 1e-12))
