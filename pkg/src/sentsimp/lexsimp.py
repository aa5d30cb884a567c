"""Explicit lexical simplification model.

A single-layer LSTM turns the source into context vectors ``v_i``; the
policy's attention weights ``alpha_t`` pool them into ``s_t`` and
``softmax(W_l s_t)`` proposes a substitution for the attended word.  At
decode time this distribution is mixed linearly into the policy's own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, CorpusError, GraphError, ShapeError
from .ndgraph.graph import (
    Node,
    Parameter,
    ParamSet,
    add,
    constant,
    log_softmax,
    matvec,
    pick,
    scale,
    stack,
    vecmat,
)
from .ndgraph.nn import Dropout, LstmParams, embed_sequence, uniform_init
from .ndgraph.rng import RngStreams
from .seq2seq import DecodeResult, DecodeStep, Seq2SeqParams, StepMixer, decode, teacher_forced_steps
from .training import EventFn, FitHistory, FitSettings, Trainer

logger = logging.getLogger(__name__)

COMPONENT = "lexsimp"
ALPHA_TOLERANCE = 1e-6

# (source ids, target ids, one attention vector per target position)
LexItem = Tuple[List[int], List[int], List[np.ndarray]]


@dataclass
class LexSimpParams:
    params: ParamSet
    embed: Parameter
    lstm: LstmParams
    w_l: Parameter

    @classmethod
    def create(cls, vocab_size: int, hidden_size: int, rng: np.random.Generator) -> "LexSimpParams":
        ps = ParamSet()
        embed = ps.new("embed", uniform_init(rng, (vocab_size, hidden_size)))
        lstm = LstmParams.create(ps, "context", hidden_size, hidden_size, 1, rng)
        w_l = ps.new("w_l", uniform_init(rng, (vocab_size, hidden_size)))
        return cls(ps, embed, lstm, w_l)

    @classmethod
    def from_dims(cls, dims: Dict[str, int]) -> "LexSimpParams":
        return cls.create(dims["vocab_size"], dims["hidden_size"], np.random.default_rng(0))

    def dims(self) -> Dict[str, int]:
        return {"vocab_size": self.w_l.shape[0], "hidden_size": self.w_l.shape[1]}


def context_states(
    params: LexSimpParams, source_ids: Sequence[int], dropout: Optional[Dropout] = None
) -> List[Node]:
    """One context vector per source token."""
    if not source_ids:
        raise CorpusError("cannot compute context states of an empty source")
    tops, _ = params.lstm.run(embed_sequence(params.embed, list(source_ids)), dropout)
    return tops


def _check_alpha(alpha: np.ndarray, n: int) -> None:
    if alpha.shape != (n,):
        raise ShapeError(f"attention over {alpha.shape} positions, source has {n}")
    if abs(float(alpha.sum()) - 1.0) > ALPHA_TOLERANCE or (alpha < 0).any():
        raise GraphError(f"attention weights do not form a distribution (sum={alpha.sum():.8f})")


def lexsimp_log_probs(params: LexSimpParams, states: Sequence[Node], alpha: np.ndarray) -> Node:
    """``log softmax(W_l sum_i alpha_i v_i)`` as a graph node."""
    alpha = np.asarray(alpha, dtype=np.float64)
    _check_alpha(alpha, len(states))
    pooled = vecmat(constant(alpha), stack(list(states)))
    return log_softmax(matvec(params.w_l, pooled))


def lexsimp_distribution(params: LexSimpParams, states: Sequence[Node], alpha: np.ndarray) -> np.ndarray:
    return np.exp(lexsimp_log_probs(params, states, alpha).value)


def interpolated_step(p_rl: np.ndarray, p_ls: np.ndarray, eta: float) -> np.ndarray:
    """``(1 - eta) p_rl + eta p_ls``."""
    if not 0.0 <= eta <= 1.0:
        raise ConfigError(f"eta must be in [0, 1], got {eta}")
    if eta == 0.0:
        return np.array(p_rl, dtype=np.float64)
    if eta == 1.0:
        return np.array(p_ls, dtype=np.float64)
    return (1.0 - eta) * np.asarray(p_rl) + eta * np.asarray(p_ls)


def make_mixer(params: LexSimpParams, source_ids: Sequence[int], eta: float) -> StepMixer:
    """Step mixer for :func:`sentsimp.seq2seq.decode` using the live policy's attention."""
    states = context_states(params, source_ids)

    def mix(step: DecodeStep) -> np.ndarray:
        if eta == 0.0:
            return step.dist
        return interpolated_step(step.dist, lexsimp_distribution(params, states, step.alpha_values), eta)

    return mix


def decode_interpolated(
    policy: Seq2SeqParams,
    lex: LexSimpParams,
    source_ids: Sequence[int],
    eta: float,
    max_len: Optional[int] = None,
) -> DecodeResult:
    """Greedy decoding from the policy mixed with the lexical model at weight *eta*."""
    return decode(policy, source_ids, "greedy", max_len, mixer=make_mixer(lex, source_ids, eta))


# ------------------------------------------------------------------
# Training
# ------------------------------------------------------------------

def harvest_alignments(policy: Seq2SeqParams, pairs: Sequence[Tuple[List[int], List[int]]]) -> List[LexItem]:
    """Teacher-force the frozen policy and keep its attention per target position."""
    items: List[LexItem] = []
    for src, tgt in pairs:
        steps = teacher_forced_steps(policy, src, tgt)
        items.append((list(src), list(tgt), [s.alpha_values.copy() for s in steps]))
    return items


def lexsimp_loss(params: LexSimpParams, item: LexItem, dropout: Optional[Dropout] = None) -> Tuple[Node, int]:
    src, tgt, alphas = item
    states = context_states(params, src, dropout)
    total: Optional[Node] = None
    for y, alpha in zip(tgt, alphas):
        lp = pick(lexsimp_log_probs(params, states, alpha), y)
        total = lp if total is None else add(total, lp)
    if total is None:
        raise CorpusError("cannot score an empty target")
    return scale(total, -1.0), len(tgt)


def train_lexsimp(
    pairs: Sequence[Tuple[List[int], List[int]]],
    policy: Seq2SeqParams,
    settings: FitSettings,
    streams: RngStreams,
    heldout: Sequence[Tuple[List[int], List[int]]] = (),
    on_event: Optional[EventFn] = None,
) -> Tuple[LexSimpParams, FitHistory]:
    """Fit the lexical model on alignments harvested from *policy*; the policy is not modified."""
    if not pairs:
        raise CorpusError("cannot train the lexical model on an empty corpus")
    lex = LexSimpParams.create(policy.vocab_size, policy.hidden_size, streams.stream("init.lexsimp"))
    train_items = harvest_alignments(policy, pairs)
    heldout_items = harvest_alignments(policy, heldout)
    logger.info("Harvested attention for %d training pairs", len(train_items))
    trainer: Trainer[LexItem] = Trainer(
        lex.params, lambda item, drop: lexsimp_loss(lex, item, drop), settings, streams, on_event=on_event
    )
    return lex, trainer.fit(train_items, heldout_items)
