"""Tests for the simplicity, relevance and fluency rewards."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sentsimp.errors import CorpusError, RewardError
from sentsimp.ndgraph.rng import RngStreams
from sentsimp.rewardmodels import (
    ZERO_REWARD,
    LmParams,
    RewardContext,
    RewardWeights,
    SaeParams,
    composite_reward,
    cosine,
    fluency_reward,
    lm_loss,
    perplexity,
    relevance_reward,
    sae_encode,
    sae_loss,
    sae_reconstruct,
    simplicity_reward,
    train_lm,
    train_sae,
)
from sentsimp.training import FitSettings
from tests.helpers import analytic_grads, assert_grad_close, numeric_grad

IDS = st.lists(st.integers(min_value=4, max_value=9), min_size=1, max_size=6)


def uniform_lm(vocab_size: int) -> LmParams:
    lm = LmParams.create(vocab_size, 4, 1, np.random.default_rng(0))
    lm.w_o.value = np.zeros_like(lm.w_o.value)
    lm.b_o.value = np.zeros_like(lm.b_o.value)
    return lm


class TestWeights:
    def test_defaults(self):
        w = RewardWeights()
        assert (w.lambda_s, w.lambda_r, w.lambda_f, w.beta) == (1.0, 0.25, 0.5, 0.1)

    def test_range_checked(self):
        with pytest.raises(RewardError):
            RewardWeights(lambda_s=1.5)
        with pytest.raises(RewardError):
            RewardWeights(beta=-0.1)

    def test_composite_is_weighted_sum(self):
        r = composite_reward(RewardWeights(), 0.8, 0.4, 0.6)
        assert r.total == pytest.approx(0.8 + 0.25 * 0.4 + 0.5 * 0.6)
        assert r.to_dict()["r_r"] == 0.4

    def test_component_out_of_range(self):
        with pytest.raises(RewardError):
            composite_reward(RewardWeights(), 1.2, 0.0, 0.0)


class TestSimplicity:
    def test_matching_reference_scores_one(self):
        assert simplicity_reward([4, 5, 6, 7], [4, 6, 8], [4, 6, 8], 0.1) == pytest.approx(1.0)

    def test_empty_output(self):
        assert simplicity_reward([4, 5], [], [4], 0.1) == 0.0

    @given(IDS, IDS, IDS, st.floats(min_value=0.0, max_value=1.0))
    def test_bounded(self, src, out, ref, beta):
        assert 0.0 <= simplicity_reward(src, out, ref, beta) <= 1.0


class TestCosine:
    def test_cases(self):
        assert cosine(np.zeros(3), np.ones(3)) == 0.0
        assert cosine(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 1.0
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
        assert cosine(np.array([1.0, 0.0]), np.array([-2.0, 0.0])) == pytest.approx(-1.0)


class TestRelevance:
    def test_identity_scores_one(self, tiny_context):
        assert relevance_reward(tiny_context.sae, [4, 5, 6], [4, 5, 6]) == 1.0

    def test_empty_output(self, tiny_context):
        assert relevance_reward(tiny_context.sae, [4, 5], []) == 0.0

    @given(IDS, IDS)
    def test_bounded(self, src, out):
        sae = SaeParams.create(10, 4, 1, np.random.default_rng(2))
        assert 0.0 <= relevance_reward(sae, src, out) <= 1.0

    def test_encoding_shape(self, tiny_context):
        assert sae_encode(tiny_context.sae, [4, 5]).shape == (4,)
        with pytest.raises(CorpusError):
            sae_encode(tiny_context.sae, [])

    def test_loss_gradient(self):
        sae = SaeParams.create(7, 3, 1, np.random.default_rng(4))

        def loss():
            return sae_loss(sae, [4, 5, 6])[0]

        grads = analytic_grads(loss, sae.params)
        for p in sae.params:
            assert_grad_close(grads[p.name], numeric_grad(loss, p))

    def test_loss_counts_eos(self, tiny_context):
        _, n = sae_loss(tiny_context.sae, [4, 5, 6])
        assert n == 4

    def test_reconstruction_is_bounded(self, tiny_context):
        assert len(sae_reconstruct(tiny_context.sae, [4, 5])) <= 9
        assert len(sae_reconstruct(tiny_context.sae, [4, 5], max_len=2)) <= 2


class TestFluency:
    def test_uniform_model(self):
        lm = uniform_lm(10)
        assert fluency_reward(lm, [4, 5, 6]) == pytest.approx(0.1)
        assert perplexity(lm, [[4, 5], [6]]) == pytest.approx(10.0)

    def test_empty_output(self, tiny_context):
        assert fluency_reward(tiny_context.lm, []) == 0.0

    def test_perplexity_needs_sentences(self, tiny_context):
        with pytest.raises(CorpusError):
            perplexity(tiny_context.lm, [])

    @given(IDS)
    def test_bounded(self, ids):
        lm = LmParams.create(10, 4, 1, np.random.default_rng(3))
        assert 0.0 < fluency_reward(lm, ids) <= 1.0

    def test_loss_gradient(self):
        lm = LmParams.create(7, 3, 2, np.random.default_rng(6))

        def loss():
            return lm_loss(lm, [4, 6, 5])[0]

        grads = analytic_grads(loss, lm.params)
        for p in lm.params:
            assert_grad_close(grads[p.name], numeric_grad(loss, p))


class TestTraining:
    settings = FitSettings(epochs=20, lr=0.05, batch_size=1, dropout=0.0)
    sentences = [[4, 5, 6], [7, 8], [9, 4, 5]]

    def test_lm_fits_its_corpus(self):
        lm, history = train_lm(self.sentences, 10, 8, 1, self.settings, RngStreams(0), heldout=self.sentences)
        assert history.heldout[-1] < history.heldout[0]
        assert perplexity(lm, self.sentences) < 10.0

    def test_sae_fits_its_corpus(self):
        _, history = train_sae(self.sentences, 10, 8, 1, self.settings, RngStreams(0), heldout=self.sentences)
        assert history.heldout[-1] < history.heldout[0]

    def test_empty_corpus(self):
        with pytest.raises(CorpusError):
            train_lm([], 10, 4, 1, self.settings, RngStreams(0))
        with pytest.raises(CorpusError):
            train_sae([], 10, 4, 1, self.settings, RngStreams(0))


class TestRewardContext:
    def test_empty_output_scores_zero(self, tiny_context):
        assert tiny_context.score([4, 5], [], [4]) is ZERO_REWARD

    def test_breakdown_adds_up(self, tiny_context):
        r = tiny_context.score([4, 5, 6, 7], [4, 6], [4, 6, 8])
        for value in (r.r_s, r.r_r, r.r_f):
            assert 0.0 <= value <= 1.0
        w = tiny_context.weights
        assert r.total == pytest.approx(w.lambda_s * r.r_s + w.lambda_r * r.r_r + w.lambda_f * r.r_f)

    def test_uses_configured_weights(self, tiny_context):
        ctx = RewardContext(RewardWeights(lambda_s=0.0, lambda_r=0.0, lambda_f=1.0), tiny_context.sae, uniform_lm(10))
        assert ctx.score([4, 5], [6], [6]).total == pytest.approx(0.1)
