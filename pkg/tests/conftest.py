"""Shared fixtures: tiny vocabularies, models and reward contexts."""

from __future__ import annotations

import numpy as np
import pytest

from sentsimp.rewardmodels import LmParams, RewardContext, RewardWeights, SaeParams
from sentsimp.seq2seq import Seq2SeqParams
from sentsimp.textproc import RESERVED_TOKENS, Vocab

TINY_WORDS = ["a", "b", "c", "d", "e", "f"]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def tiny_vocab() -> Vocab:
    return Vocab(list(RESERVED_TOKENS) + TINY_WORDS, min_count=0)


@pytest.fixture
def tiny_policy(tiny_vocab: Vocab) -> Seq2SeqParams:
    return Seq2SeqParams.create(len(tiny_vocab), 4, 2, np.random.default_rng(1))


@pytest.fixture
def tiny_context(tiny_vocab: Vocab) -> RewardContext:
    v = len(tiny_vocab)
    sae = SaeParams.create(v, 4, 1, np.random.default_rng(2))
    lm = LmParams.create(v, 4, 1, np.random.default_rng(3))
    return RewardContext(RewardWeights(), sae, lm)
