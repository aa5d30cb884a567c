"""Attention-based LSTM encoder-decoder.

The encoder reads the source with a stacked LSTM; the decoder starts from
the encoder's final per-layer states, attends over the top-layer source
states with dot-product attention, and predicts the next token from
``W_o tanh(U_h h_t + W_h c_t)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CorpusError, ShapeError, VocabError
from .ndgraph.graph import (
    Array,
    Node,
    Parameter,
    ParamSet,
    add,
    log_softmax,
    matvec,
    pick,
    scale,
    softmax_node,
    stack,
    tanh,
    vecmat,
)
from .ndgraph.nn import Dropout, LstmParams, LstmState, embed_sequence, uniform_init
from .textproc import BOS, EOS, UNK_TOKEN, TokenSeq, Vocab

logger = logging.getLogger(__name__)

COMPONENT = "seq2seq"


# ------------------------------------------------------------------
# Parameters
# ------------------------------------------------------------------

@dataclass
class Seq2SeqParams:
    """All trainable weights of the encoder-decoder, registered in ``params``."""

    params: ParamSet
    src_embed: Parameter
    tgt_embed: Parameter
    encoder: LstmParams
    decoder: LstmParams
    w_o: Parameter
    u_h: Parameter
    w_h: Parameter

    @classmethod
    def create(
        cls,
        vocab_size: int,
        hidden_size: int,
        num_layers: int,
        rng: np.random.Generator,
    ) -> "Seq2SeqParams":
        if vocab_size < 1 or hidden_size < 1 or num_layers < 1:
            raise ShapeError(
                f"invalid dimensions vocab={vocab_size} d={hidden_size} layers={num_layers}"
            )
        d = hidden_size
        ps = ParamSet()
        src_embed = ps.new("src_embed", uniform_init(rng, (vocab_size, d)))
        tgt_embed = ps.new("tgt_embed", uniform_init(rng, (vocab_size, d)))
        encoder = LstmParams.create(ps, "encoder", d, d, num_layers, rng)
        decoder = LstmParams.create(ps, "decoder", d, d, num_layers, rng)
        w_o = ps.new("w_o", uniform_init(rng, (vocab_size, d)))
        u_h = ps.new("u_h", uniform_init(rng, (d, d)))
        w_h = ps.new("w_h", uniform_init(rng, (d, d)))
        return cls(ps, src_embed, tgt_embed, encoder, decoder, w_o, u_h, w_h)

    @classmethod
    def from_dims(cls, dims: Dict[str, int]) -> "Seq2SeqParams":
        """Allocate a correctly shaped model (weights to be loaded)."""
        return cls.create(
            dims["vocab_size"], dims["hidden_size"], dims["num_layers"],
            np.random.default_rng(0),
        )

    def dims(self) -> Dict[str, int]:
        return {
            "vocab_size": self.vocab_size,
            "hidden_size": self.hidden_size,
            "num_layers": len(self.encoder.layers),
        }

    @property
    def vocab_size(self) -> int:
        return self.w_o.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.w_o.shape[1]


# ------------------------------------------------------------------
# Encoding and attention
# ------------------------------------------------------------------

@dataclass
class EncoderStates:
    """Top-layer source states plus the final state of every layer."""

    states: List[Node]
    final: LstmState
    matrix: Node = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.matrix = stack(self.states)

    def __len__(self) -> int:
        return len(self.states)


def _check_ids(ids: Sequence[int], vocab_size: int) -> None:
    for i in ids:
        if not 0 <= i < vocab_size:
            raise VocabError(f"token id {i} outside vocabulary of size {vocab_size}")


def encode(
    params: Seq2SeqParams,
    source_ids: Sequence[int],
    dropout: Optional[Dropout] = None,
) -> EncoderStates:
    if not source_ids:
        raise CorpusError("cannot encode an empty source sentence")
    _check_ids(source_ids, params.vocab_size)
    inputs = embed_sequence(params.src_embed, list(source_ids))
    tops, final = params.encoder.run(inputs, dropout)
    return EncoderStates(tops, final)


def attend(h_t: Node, enc: EncoderStates) -> Tuple[Node, Node]:
    """Dot-product attention: returns (alpha_t, context c_t)."""
    if h_t.shape != (enc.matrix.shape[1],):
        raise ShapeError(f"decoder state {h_t.shape} vs encoder states {enc.matrix.shape}")
    alpha = softmax_node(matvec(enc.matrix, h_t))
    return alpha, vecmat(alpha, enc.matrix)


# ------------------------------------------------------------------
# Decoding
# ------------------------------------------------------------------

@dataclass
class DecodeStep:
    """One decoder step: next-token log-probabilities and attention internals."""

    log_probs: Node
    alpha: Node
    context: Node
    state: LstmState

    @property
    def hidden(self) -> Node:
        return self.state[-1][0]

    @property
    def dist(self) -> Array:
        return np.exp(self.log_probs.value)

    @property
    def alpha_values(self) -> Array:
        return self.alpha.value


def decode_step(
    params: Seq2SeqParams,
    prev_id: int,
    state: LstmState,
    enc: EncoderStates,
    dropout: Optional[Dropout] = None,
) -> DecodeStep:
    _check_ids([prev_id], params.vocab_size)
    x = embed_sequence(params.tgt_embed, [prev_id])[0]
    state = params.decoder.step(x, state, dropout)
    h = state[-1][0]
    alpha, context = attend(h, enc)
    hidden = tanh(add(matvec(params.u_h, h), matvec(params.w_h, context)))
    if dropout is not None:
        hidden = dropout(hidden)
    return DecodeStep(log_softmax(matvec(params.w_o, hidden)), alpha, context, state)


def teacher_forced_steps(
    params: Seq2SeqParams,
    source_ids: Sequence[int],
    target_ids: Sequence[int],
    dropout: Optional[Dropout] = None,
    enc: Optional[EncoderStates] = None,
) -> List[DecodeStep]:
    """Decoder steps predicting each target token from the gold prefix."""
    enc = enc if enc is not None else encode(params, source_ids, dropout)
    state = enc.final
    prev = BOS
    steps: List[DecodeStep] = []
    for y in target_ids:
        step = decode_step(params, prev, state, enc, dropout)
        steps.append(step)
        state, prev = step.state, y
    return steps


def nll_loss(
    params: Seq2SeqParams,
    source_ids: Sequence[int],
    target_ids: Sequence[int],
    dropout: Optional[Dropout] = None,
) -> Node:
    """Summed teacher-forced negative log-likelihood of *target_ids*.

    Raises:
        CorpusError: if the target is empty or does not end with EOS.
    """
    if not target_ids:
        raise CorpusError("cannot score an empty target")
    if target_ids[-1] != EOS:
        raise CorpusError("target ids must end with EOS")
    _check_ids(target_ids, params.vocab_size)
    steps = teacher_forced_steps(params, source_ids, target_ids, dropout)
    return sequence_nll(steps, target_ids)


def sequence_nll(steps: Sequence[DecodeStep], target_ids: Sequence[int]) -> Node:
    total: Optional[Node] = None
    for step, y in zip(steps, target_ids):
        lp = pick(step.log_probs, y)
        total = lp if total is None else add(total, lp)
    assert total is not None
    return scale(total, -1.0)


def default_max_len(source_len: int, factor: float = 1.5) -> int:
    return int(factor * source_len + 5)


# Maps a decoder step to the distribution actually used for choosing the
# next token (lexical interpolation plugs in here).
StepMixer = Callable[[DecodeStep], Array]


@dataclass
class DecodeResult:
    """Emitted ids (EOS excluded) and every decoder step taken."""

    ids: List[int]
    steps: List[DecodeStep]
    finished: bool

    def tokens(self, vocab: Vocab) -> TokenSeq:
        return TokenSeq(vocab.token(i) for i in self.ids)

    @property
    def alphas(self) -> List[Array]:
        return [s.alpha_values for s in self.steps]


def choose(dist: Array, mode: str, rng: Optional[np.random.Generator]) -> int:
    """Greedy argmax (ties go to the lowest id) or a draw from *dist*."""
    if mode == "greedy":
        return int(np.argmax(dist))
    if mode == "sample":
        if rng is None:
            raise ValueError("sampling needs an rng")
        cdf = np.cumsum(dist)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return min(idx, len(dist) - 1)
    raise ValueError(f"unknown decode mode '{mode}'")


def decode(
    params: Seq2SeqParams,
    source_ids: Sequence[int],
    mode: str = "greedy",
    max_len: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    mixer: Optional[StepMixer] = None,
) -> DecodeResult:
    """Generate until EOS or *max_len* tokens (default ``1.5*|X| + 5``)."""
    max_len = default_max_len(len(source_ids)) if max_len is None else max_len
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    enc = encode(params, source_ids)
    state = enc.final
    prev = BOS
    ids: List[int] = []
    steps: List[DecodeStep] = []
    for _ in range(max_len):
        step = decode_step(params, prev, state, enc)
        steps.append(step)
        dist = mixer(step) if mixer is not None else step.dist
        y = choose(dist, mode, rng)
        if y == EOS:
            return DecodeResult(ids, steps, True)
        ids.append(y)
        state, prev = step.state, y
    return DecodeResult(ids, steps, False)


def unk_replace(
    output: Sequence[str],
    alphas: Sequence[Optional[Array]],
    source: Sequence[str],
) -> TokenSeq:
    """Replace each UNK with the source token its step attended to most.

    Ties go to the leftmost source position.

    Raises:
        ShapeError: if an UNK step has no attention weights or the weights
            do not cover the source.
    """
    out: List[str] = []
    for i, tok in enumerate(output):
        if tok != UNK_TOKEN:
            out.append(tok)
            continue
        alpha = alphas[i] if i < len(alphas) else None
        if alpha is None:
            raise ShapeError(f"no attention weights for UNK at step {i}")
        if len(alpha) != len(source):
            raise ShapeError(f"attention over {len(alpha)} positions, source has {len(source)}")
        out.append(source[int(np.argmax(alpha))])
    return TokenSeq(out)


def load_embeddings(path: Path, vocab: Vocab, dim: int, init: Optional[Array] = None) -> Array:
    """Overwrite rows of an embedding table from a ``word v1 ... vd`` text file.

    Tokens absent from the file keep their row from *init* (zeros when
    omitted).

    Raises:
        ShapeError: if a vector has the wrong dimension or *init* is misshaped.
    """
    table = np.zeros((len(vocab), dim)) if init is None else np.array(init, dtype=np.float64)
    if table.shape != (len(vocab), dim):
        raise ShapeError(f"embedding table {table.shape}, expected {(len(vocab), dim)}")
    found = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise ShapeError(f"{path}:{lineno}: vector has {len(values)} values, expected {dim}")
            if word in vocab:
                table[vocab.id(word)] = np.array(values, dtype=np.float64)
                found += 1
    logger.info("Loaded %d of %d embeddings from %s", found, len(vocab), path)
    return table
