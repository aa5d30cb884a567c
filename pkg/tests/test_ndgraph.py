"""Tests for the autodiff graph, LSTM blocks, optimizers, rng streams and the container format."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from sentsimp.errors import CheckpointError, GraphError, ShapeError
from sentsimp.ndgraph import serialize
from sentsimp.ndgraph.graph import (
    Parameter,
    ParamSet,
    add,
    concat,
    constant,
    detach,
    dot,
    forward_backward,
    log_softmax,
    matvec,
    mul,
    pick,
    sigmoid,
    softmax,
    softmax_node,
    stack,
    tanh,
    total,
    vecmat,
)
from sentsimp.ndgraph.nn import Dropout, LstmParams, dropout, lstm_step
from sentsimp.ndgraph.optim import (
    OptimState,
    Optimizer,
    adam_step,
    clip_gradients,
    global_norm,
    sgd_step,
)
from sentsimp.ndgraph.rng import RngStreams
from tests.helpers import analytic_grads, assert_grad_close, numeric_grad


class TestGraph:
    def test_linear_gradient_is_outer_product(self, rng):
        w = Parameter(rng.normal(size=(3, 4)), "w")
        x = rng.normal(size=4)
        forward_backward(total(matvec(w, constant(x))))
        assert np.allclose(w.grad, np.outer(np.ones(3), x))

    def test_composite_matches_finite_differences(self, rng):
        w = Parameter(rng.normal(size=(3, 4)), "w")
        u = Parameter(rng.normal(size=(3, 4)), "u")
        v = Parameter(rng.normal(size=3), "v")
        x = constant(rng.normal(size=4))

        def loss():
            h = tanh(matvec(w, x))
            g = sigmoid(vecmat(h, u))
            z = concat([mul(h, v), g])
            return add(pick(log_softmax(z), 2), dot(softmax_node(h), v))

        grads = analytic_grads(loss, [w, u, v])
        for p in (w, u, v):
            assert_grad_close(grads[p.name], numeric_grad(loss, p), rtol=1e-6)

    def test_attention_pooling_gradient(self, rng):
        states = Parameter(rng.normal(size=(5, 3)), "states")
        h = Parameter(rng.normal(size=3), "h")

        def loss():
            alpha = softmax_node(matvec(states, h))
            return dot(vecmat(alpha, states), tanh(h))

        grads = analytic_grads(loss, [states, h])
        assert_grad_close(grads["states"], numeric_grad(loss, states), rtol=1e-6)
        assert_grad_close(grads["h"], numeric_grad(loss, h), rtol=1e-6)

    def test_stack_routes_rows(self, rng):
        a = Parameter(rng.normal(size=3), "a")
        b = Parameter(rng.normal(size=3), "b")
        x = rng.normal(size=3)
        forward_backward(total(matvec(stack([a, b]), constant(x))))
        assert np.allclose(a.grad, x) and np.allclose(b.grad, x)

    def test_gradients_accumulate(self, rng):
        w = Parameter(rng.normal(size=3), "w")
        forward_backward(total(w))
        forward_backward(total(w))
        assert np.allclose(w.grad, 2.0)

    def test_detach_blocks_one_path(self, rng):
        w = Parameter(rng.normal(size=3), "w")
        forward_backward(total(mul(w, detach(w))))
        assert np.allclose(w.grad, w.value)

    def test_non_scalar_loss(self, rng):
        w = Parameter(rng.normal(size=3), "w")
        with pytest.raises(GraphError):
            forward_backward(tanh(w))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            add(constant(np.zeros(2)), constant(np.zeros(3)))
        with pytest.raises(ShapeError):
            matvec(constant(np.zeros((2, 3))), constant(np.zeros(2)))


class TestSoftmax:
    def test_uniform(self):
        assert np.allclose(softmax(np.zeros(4)), 0.25)

    def test_large_logits_are_stable(self):
        p = softmax(np.array([1000.0, 1000.0, -1000.0]))
        assert np.all(np.isfinite(p))
        assert p == pytest.approx([0.5, 0.5, 0.0])

    def test_log_softmax_normalized(self, rng):
        lp = log_softmax(constant(rng.normal(size=6) * 50))
        assert np.exp(lp.value).sum() == pytest.approx(1.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ShapeError):
            softmax(np.array([]))
        with pytest.raises(GraphError):
            softmax(np.array([0.0, np.nan]))


class TestLstm:
    def test_sum_of_states_matches_finite_differences(self, rng):
        ps = ParamSet()
        lstm = LstmParams.create(ps, "lstm", 3, 4, 2, rng)
        inputs = [constant(rng.normal(size=3)) for _ in range(3)]

        def loss():
            tops, final = lstm.run(inputs)
            return add(add(total(tops[-1]), total(tops[0])), total(final[0][1]))

        grads = analytic_grads(loss, ps)
        for p in ps:
            assert_grad_close(grads[p.name], numeric_grad(loss, p))

    def test_zero_weights_give_half_gated_state(self):
        ps = ParamSet()
        lstm = LstmParams.create(ps, "lstm", 2, 2, 1, np.random.default_rng(0))
        for p in ps:
            p.value = np.zeros_like(p.value)
        h, c = lstm_step(lstm.layers[0], constant(np.ones(2)), constant(np.zeros(2)), constant(np.zeros(2)))
        # all gates 0.5, candidate tanh(0) = 0
        assert np.allclose(c.value, 0.0) and np.allclose(h.value, 0.0)

    def test_input_shape_checked(self, rng):
        ps = ParamSet()
        lstm = LstmParams.create(ps, "lstm", 3, 4, 1, rng)
        with pytest.raises(ShapeError):
            lstm_step(lstm.layers[0], constant(np.zeros(2)), constant(np.zeros(4)), constant(np.zeros(4)))

    def test_parameter_names(self, rng):
        ps = ParamSet()
        LstmParams.create(ps, "enc", 3, 4, 2, rng)
        assert ps.names() == ["enc.l0.w", "enc.l0.b", "enc.l1.w", "enc.l1.b"]
        assert ps["enc.l1.w"].shape == (16, 8)


class TestDropout:
    def test_eval_mode_is_identity(self, rng):
        x = rng.normal(size=10)
        assert dropout(x, 0.5, False, None) is x

    def test_train_mode_mask(self):
        x = np.ones(10000)
        y = dropout(x, 0.25, True, np.random.default_rng(0))
        assert set(np.unique(y)) <= {0.0, 1.0 / 0.75}
        assert y.mean() == pytest.approx(1.0, abs=0.05)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            dropout(np.ones(3), 1.0, True, np.random.default_rng(0))
        with pytest.raises(ValueError):
            Dropout(-0.1, True)

    def test_graph_dropout_routes_gradient_through_mask(self):
        w = Parameter(np.ones(1000), "w")
        drop = Dropout(0.5, True, np.random.default_rng(0))
        forward_backward(total(drop(w)))
        assert set(np.unique(w.grad)) <= {0.0, 2.0}


class TestOptim:
    def make(self, value):
        ps = ParamSet()
        ps.new("p", np.array(value, dtype=np.float64))
        return ps

    def test_clip_preserves_direction(self):
        clipped = clip_gradients([np.array([3.0]), np.array([4.0])], 1.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        assert clipped[0][0] == pytest.approx(0.6) and clipped[1][0] == pytest.approx(0.8)

    def test_clip_below_norm_is_copy(self):
        g = [np.array([0.3, 0.4])]
        out = clip_gradients(g, 5.0)
        assert np.array_equal(out[0], g[0]) and out[0] is not g[0]

    def test_clip_requires_positive_norm(self):
        with pytest.raises(ValueError):
            clip_gradients([np.ones(2)], 0.0)

    def test_sgd_closed_form(self):
        ps = self.make([1.0, -2.0])
        g = np.array([0.5, 1.0])
        for _ in range(4):
            sgd_step(ps, [g], 0.1)
        assert ps["p"].value == pytest.approx([1.0 - 4 * 0.05, -2.0 - 4 * 0.1])

    def test_sgd_rejects_bad_shapes(self):
        with pytest.raises(ShapeError):
            sgd_step(self.make([1.0]), [np.ones(2)], 0.1)

    def test_adam_two_step_trace(self):
        ps = self.make([1.0])
        state = OptimState.adam(ps, lr=0.1)
        adam_step(state, ps, [np.array([0.5])])
        # m_hat = 0.5, v_hat = 0.25 -> step of lr * 0.5 / 0.5
        assert ps["p"].value[0] == pytest.approx(0.9)
        adam_step(state, ps, [np.array([0.5])])
        assert ps["p"].value[0] == pytest.approx(0.8)
        assert state.step == 2
        assert state.m["p"][0] == pytest.approx(0.095)
        assert state.v["p"][0] == pytest.approx(0.999 * 0.00025 + 0.001 * 0.25)

    def test_adam_state_round_trip(self):
        ps = self.make([1.0, 2.0])
        state = OptimState.adam(ps)
        adam_step(state, ps, [np.array([0.1, 0.2])])
        restored = OptimState.restore(state.meta(), state.arrays())
        assert restored.step == 1
        assert np.array_equal(restored.m["p"], state.m["p"])
        assert np.array_equal(restored.v["p"], state.v["p"])

    def test_optimizer_averages_and_zeroes(self):
        ps = self.make([0.0])
        opt = Optimizer(ps, OptimState.sgd(1.0), clip_norm=None)
        forward_backward(total(scale_by(ps["p"], 4.0)))
        forward_backward(total(scale_by(ps["p"], 2.0)))
        norm = opt.step(scale=0.5)
        assert norm == pytest.approx(3.0)
        assert ps["p"].value[0] == pytest.approx(-3.0)
        assert ps["p"].grad is None


def scale_by(p, c):
    return mul(p, constant(np.full(p.shape, c)))


class TestRngStreams:
    def test_same_name_same_draws(self):
        a = RngStreams(7).stream("shuffle", 3).random(5)
        b = RngStreams(7).stream("shuffle", 3).random(5)
        assert np.array_equal(a, b)

    def test_keys_and_names_separate_streams(self):
        s = RngStreams(7)
        base = s.stream("shuffle", 3).random(5)
        assert not np.array_equal(base, s.stream("shuffle", 4).random(5))
        assert not np.array_equal(base, s.stream("dropout", 3).random(5))
        assert not np.array_equal(base, RngStreams(8).stream("shuffle", 3).random(5))


class TestContainer:
    def container(self):
        return serialize.Container(
            "seq2seq",
            {"w": np.arange(6, dtype=np.float64).reshape(2, 3), "b": np.array([0.5])},
            {"dims": {"d": 3}},
        )

    def test_round_trip(self):
        out = serialize.loads(serialize.dumps(self.container()))
        assert out.component == "seq2seq"
        assert np.array_equal(out.arrays["w"], np.arange(6).reshape(2, 3))
        assert out.meta == {"dims": {"d": 3}}

    def test_bytes_are_deterministic(self):
        assert serialize.dumps(self.container()) == serialize.dumps(self.container())

    def test_header_layout(self):
        data = serialize.dumps(self.container())
        assert data.startswith(b"DRESS1")
        version, _ = struct.unpack_from("<II", data, 6)
        assert version == serialize.SCHEMA_VERSION

    def test_bad_magic(self):
        with pytest.raises(CheckpointError):
            serialize.loads(b"NOTIT!" + serialize.dumps(self.container())[6:])

    def test_version_mismatch(self):
        data = bytearray(serialize.dumps(self.container()))
        struct.pack_into("<I", data, 6, serialize.SCHEMA_VERSION + 1)
        with pytest.raises(CheckpointError, match="schema version"):
            serialize.loads(bytes(data))

    def test_truncated_and_trailing(self):
        data = serialize.dumps(self.container())
        with pytest.raises(CheckpointError):
            serialize.loads(data[:-8])
        with pytest.raises(CheckpointError):
            serialize.loads(data + b"\x00")

    def test_component_mismatch(self):
        with pytest.raises(CheckpointError):
            serialize.loads(serialize.dumps(self.container()), component="lm")

    def test_file_round_trip(self, tmp_path):
        serialize.save(tmp_path / "sub" / "m.ckpt", self.container())
        assert serialize.load(tmp_path / "sub" / "m.ckpt").arrays["b"][0] == 0.5
