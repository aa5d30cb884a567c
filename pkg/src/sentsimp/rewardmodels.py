"""Reward components for reinforcement training.

* simplicity: SARI of the output against the reference, mixed with the
  reverse direction and rescaled to [0, 1];
* relevance: cosine between sequence auto-encoder vectors of source and
  output;
* fluency: exponentiated mean token log-probability under an LSTM
  language model trained on simple sentences.

All rewards operate on token ids, the policy's own alphabet.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CorpusError, RewardError
from .metrics.sari import reverse_sari, sari
from .ndgraph.graph import (
    Node,
    Parameter,
    ParamSet,
    add,
    log_softmax,
    matvec,
    pick,
    scale,
)
from .ndgraph.nn import Dropout, LstmParams, embed_sequence, uniform_init
from .ndgraph.rng import RngStreams
from .textproc import BOS, EOS
from .training import EventFn, FitHistory, FitSettings, Trainer, mean_token_loss

logger = logging.getLogger(__name__)

SAE_COMPONENT = "sae"
LM_COMPONENT = "lm"


# ------------------------------------------------------------------
# Weights and breakdowns
# ------------------------------------------------------------------

@dataclass(frozen=True)
class RewardWeights:
    lambda_s: float = 1.0
    lambda_r: float = 0.25
    lambda_f: float = 0.5
    beta: float = 0.1

    def __post_init__(self) -> None:
        for name in ("lambda_s", "lambda_r", "lambda_f", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise RewardError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class RewardBreakdown:
    r_s: float
    r_r: float
    r_f: float
    total: float

    def to_dict(self) -> Dict[str, float]:
        return {"r_s": self.r_s, "r_r": self.r_r, "r_f": self.r_f, "total": self.total}


ZERO_REWARD = RewardBreakdown(0.0, 0.0, 0.0, 0.0)


def composite_reward(weights: RewardWeights, r_s: float, r_r: float, r_f: float) -> RewardBreakdown:
    """Weighted sum of the three components.

    Raises:
        RewardError: if any component lies outside [0, 1].
    """
    for name, value in (("r_s", r_s), ("r_r", r_r), ("r_f", r_f)):
        if not 0.0 <= value <= 1.0:
            raise RewardError(f"reward component {name}={value} outside [0, 1]")
    total = weights.lambda_s * r_s + weights.lambda_r * r_r + weights.lambda_f * r_f
    return RewardBreakdown(r_s, r_r, r_f, total)


def simplicity_reward(
    source: Sequence[object],
    output: Sequence[object],
    reference: Sequence[object],
    beta: float,
) -> float:
    """``beta*SARI(X, Y_hat, Y) + (1-beta)*SARI(X, Y, Y_hat)``, scaled to [0, 1].

    An empty output scores 0.
    """
    if not output:
        return 0.0
    src, out, ref = list(source), list(output), list(reference)
    forward = sari(src, out, [ref]).total  # type: ignore[arg-type]
    backward = reverse_sari(src, out, ref).total  # type: ignore[arg-type]
    return min(1.0, max(0.0, (beta * forward + (1.0 - beta) * backward) / 100.0))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector has zero norm."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(a, b):
        return 1.0
    return float(a @ b) / (na * nb)


# ------------------------------------------------------------------
# Sequence auto-encoder
# ------------------------------------------------------------------

@dataclass
class SaeParams:
    """Encoder-decoder without attention over one shared vocabulary."""

    params: ParamSet
    embed: Parameter
    encoder: LstmParams
    decoder: LstmParams
    w_o: Parameter

    @classmethod
    def create(cls, vocab_size: int, hidden_size: int, num_layers: int, rng: np.random.Generator) -> "SaeParams":
        d = hidden_size
        ps = ParamSet()
        embed = ps.new("embed", uniform_init(rng, (vocab_size, d)))
        encoder = LstmParams.create(ps, "encoder", d, d, num_layers, rng)
        decoder = LstmParams.create(ps, "decoder", d, d, num_layers, rng)
        w_o = ps.new("w_o", uniform_init(rng, (vocab_size, d)))
        return cls(ps, embed, encoder, decoder, w_o)

    @classmethod
    def from_dims(cls, dims: Dict[str, int]) -> "SaeParams":
        return cls.create(dims["vocab_size"], dims["hidden_size"], dims["num_layers"], np.random.default_rng(0))

    def dims(self) -> Dict[str, int]:
        return {
            "vocab_size": self.w_o.shape[0],
            "hidden_size": self.w_o.shape[1],
            "num_layers": len(self.encoder.layers),
        }


def _check_nonempty(ids: Sequence[int], what: str) -> None:
    if not ids:
        raise CorpusError(f"cannot {what} an empty sentence")


def sae_loss(sae: SaeParams, ids: Sequence[int], dropout: Optional[Dropout] = None) -> Tuple[Node, int]:
    """Reconstruction NLL of ``ids + [EOS]``; returns (loss, scored tokens)."""
    _check_nonempty(ids, "reconstruct")
    _, state = sae.encoder.run(embed_sequence(sae.embed, list(ids)), dropout)
    target = list(ids) + [EOS]
    prev = BOS
    total: Optional[Node] = None
    for y in target:
        x = embed_sequence(sae.embed, [prev])[0]
        state = sae.decoder.step(x, state, dropout)
        h = state[-1][0]
        if dropout is not None:
            h = dropout(h)
        lp = pick(log_softmax(matvec(sae.w_o, h)), y)
        total = lp if total is None else add(total, lp)
        prev = y
    assert total is not None
    return scale(total, -1.0), len(target)


def sae_encode(sae: SaeParams, ids: Sequence[int]) -> np.ndarray:
    """Final top-layer encoder state for a sentence."""
    _check_nonempty(ids, "encode")
    tops, _ = sae.encoder.run(embed_sequence(sae.embed, list(ids)))
    return tops[-1].value.copy()


def sae_reconstruct(sae: SaeParams, ids: Sequence[int], max_len: Optional[int] = None) -> List[int]:
    """Greedy reconstruction of *ids*, EOS excluded."""
    _check_nonempty(ids, "reconstruct")
    max_len = max_len if max_len is not None else 2 * len(ids) + 5
    _, state = sae.encoder.run(embed_sequence(sae.embed, list(ids)))
    prev, out = BOS, []
    for _ in range(max_len):
        state = sae.decoder.step(embed_sequence(sae.embed, [prev])[0], state)
        y = int(np.argmax(matvec(sae.w_o, state[-1][0]).value))
        if y == EOS:
            break
        out.append(y)
        prev = y
    return out


def train_sae(
    sentences: Sequence[Sequence[int]],
    vocab_size: int,
    hidden_size: int,
    num_layers: int,
    settings: FitSettings,
    streams: RngStreams,
    heldout: Sequence[Sequence[int]] = (),
    on_event: Optional[EventFn] = None,
) -> Tuple[SaeParams, FitHistory]:
    """Train the auto-encoder on complex and simple sentences alike."""
    if not sentences:
        raise CorpusError("cannot train the auto-encoder on an empty corpus")
    sae = SaeParams.create(vocab_size, hidden_size, num_layers, streams.stream("init.sae"))
    trainer: Trainer[Sequence[int]] = Trainer(
        sae.params, lambda ids, drop: sae_loss(sae, ids, drop), settings, streams, on_event=on_event
    )
    history = trainer.fit(list(sentences), list(heldout))
    return sae, history


def relevance_reward(sae: SaeParams, source: Sequence[int], output: Sequence[int]) -> float:
    """Cosine of auto-encoder vectors, floored at 0; empty output scores 0."""
    if not output:
        return 0.0
    if list(source) == list(output):
        q = sae_encode(sae, source)
        return 1.0 if np.linalg.norm(q) > 0 else 0.0
    return min(1.0, max(0.0, cosine(sae_encode(sae, source), sae_encode(sae, output))))


# ------------------------------------------------------------------
# Language model
# ------------------------------------------------------------------

@dataclass
class LmParams:
    params: ParamSet
    embed: Parameter
    lstm: LstmParams
    w_o: Parameter
    b_o: Parameter

    @classmethod
    def create(cls, vocab_size: int, hidden_size: int, num_layers: int, rng: np.random.Generator) -> "LmParams":
        d = hidden_size
        ps = ParamSet()
        embed = ps.new("embed", uniform_init(rng, (vocab_size, d)))
        lstm = LstmParams.create(ps, "lstm", d, d, num_layers, rng)
        w_o = ps.new("w_o", uniform_init(rng, (vocab_size, d)))
        b_o = ps.new("b_o", np.zeros(vocab_size))
        return cls(ps, embed, lstm, w_o, b_o)

    @classmethod
    def from_dims(cls, dims: Dict[str, int]) -> "LmParams":
        return cls.create(dims["vocab_size"], dims["hidden_size"], dims["num_layers"], np.random.default_rng(0))

    def dims(self) -> Dict[str, int]:
        return {
            "vocab_size": self.w_o.shape[0],
            "hidden_size": self.w_o.shape[1],
            "num_layers": len(self.lstm.layers),
        }

    @property
    def vocab_size(self) -> int:
        return self.w_o.shape[0]


def lm_log_probs(lm: LmParams, ids: Sequence[int], dropout: Optional[Dropout] = None) -> List[Node]:
    """Log-probability nodes of each token of ``ids + [EOS]`` given BOS and its prefix."""
    state = lm.lstm.zero_state()
    out: List[Node] = []
    prev = BOS
    for y in list(ids) + [EOS]:
        state = lm.lstm.step(embed_sequence(lm.embed, [prev])[0], state, dropout)
        h = state[-1][0]
        if dropout is not None:
            h = dropout(h)
        out.append(pick(log_softmax(add(matvec(lm.w_o, h), lm.b_o)), y))
        prev = y
    return out


def lm_loss(lm: LmParams, ids: Sequence[int], dropout: Optional[Dropout] = None) -> Tuple[Node, int]:
    _check_nonempty(ids, "score")
    steps = lm_log_probs(lm, ids, dropout)
    total = steps[0]
    for lp in steps[1:]:
        total = add(total, lp)
    return scale(total, -1.0), len(steps)


def perplexity(lm: LmParams, sentences: Sequence[Sequence[int]]) -> float:
    """Corpus perplexity, EOS included."""
    if not sentences:
        raise CorpusError("perplexity needs at least one sentence")
    return math.exp(mean_token_loss([list(s) for s in sentences], lambda ids, drop: lm_loss(lm, ids, drop)))


def train_lm(
    sentences: Sequence[Sequence[int]],
    vocab_size: int,
    hidden_size: int,
    num_layers: int,
    settings: FitSettings,
    streams: RngStreams,
    heldout: Sequence[Sequence[int]] = (),
    on_event: Optional[EventFn] = None,
) -> Tuple[LmParams, FitHistory]:
    """Train the fluency language model on simple-side sentences."""
    if not sentences:
        raise CorpusError("cannot train the language model on an empty corpus")
    lm = LmParams.create(vocab_size, hidden_size, num_layers, streams.stream("init.lm"))
    trainer: Trainer[Sequence[int]] = Trainer(
        lm.params, lambda ids, drop: lm_loss(lm, ids, drop), settings, streams, on_event=on_event
    )
    history = trainer.fit(list(sentences), list(heldout))
    if heldout:
        logger.info("LM held-out perplexity %.2f", math.exp(history.heldout[-1]))
    return lm, history


def fluency_reward(lm: LmParams, output: Sequence[int]) -> float:
    """``exp`` of the mean log-probability over the output and its EOS; empty scores 0."""
    if not output:
        return 0.0
    steps = lm_log_probs(lm, output)
    return min(1.0, math.exp(sum(lp.item() for lp in steps) / len(steps)))


# ------------------------------------------------------------------
# Combined scorer
# ------------------------------------------------------------------

@dataclass
class RewardContext:
    """Everything needed to score a rollout."""

    weights: RewardWeights
    sae: SaeParams
    lm: LmParams

    def score(self, source: Sequence[int], output: Sequence[int], reference: Sequence[int]) -> RewardBreakdown:
        if not output:
            return ZERO_REWARD
        return composite_reward(
            self.weights,
            simplicity_reward(source, output, reference, self.weights.beta),
            relevance_reward(self.sae, source, output),
            fluency_reward(self.lm, output),
        )
