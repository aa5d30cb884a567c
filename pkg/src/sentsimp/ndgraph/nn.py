"""Neural building blocks: LSTM layers, embeddings, dropout and initialization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ShapeError
from .graph import Array, Node, Parameter, ParamSet, constant, mul, row, slice_

INIT_SCALE = 0.1


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], scale: float = INIT_SCALE) -> Array:
    return rng.uniform(-scale, scale, size=shape)


# ------------------------------------------------------------------
# LSTM
# ------------------------------------------------------------------

def lstm_cell(w: Node, b: Node, x: Node, h: Node, c: Node) -> Node:
    """One fused LSTM step; returns the concatenation ``[h_new; c_new]``.

    ``w`` has shape (4d, n_in + d) and ``b`` shape (4d,), gates ordered
    input, forget, output, candidate.
    """
    d = h.shape[0]
    n_in = x.shape[0]
    if w.shape != (4 * d, n_in + d) or b.shape != (4 * d,) or c.shape != (d,):
        raise ShapeError(
            f"lstm_cell: W {w.shape}, b {b.shape}, x {x.shape}, h {h.shape}, c {c.shape}"
        )
    xh = np.concatenate([x.value, h.value])
    z = w.value @ xh + b.value
    gi = 1.0 / (1.0 + np.exp(-z[:d]))
    gf = 1.0 / (1.0 + np.exp(-z[d:2 * d]))
    go = 1.0 / (1.0 + np.exp(-z[2 * d:3 * d]))
    gg = np.tanh(z[3 * d:])
    c_new = gf * c.value + gi * gg
    tc = np.tanh(c_new)
    h_new = go * tc

    def backward(g: Array) -> Tuple[Array, Array, Array, Array, Array]:
        gh, gc = g[:d], g[d:]
        dc = gc + gh * go * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * gg * gi * (1.0 - gi),
            dc * c.value * gf * (1.0 - gf),
            gh * tc * go * (1.0 - go),
            dc * gi * (1.0 - gg * gg),
        ])
        dxh = w.value.T @ dz
        return np.outer(dz, xh), dz, dxh[:n_in], dxh[n_in:], dc * gf

    return Node(np.concatenate([h_new, c_new]), (w, b, x, h, c), backward)


@dataclass
class LstmLayer:
    w: Parameter
    b: Parameter

    @property
    def hidden_size(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w.shape[1] - self.hidden_size


def lstm_step(layer: LstmLayer, x: Node, h_prev: Node, c_prev: Node) -> Tuple[Node, Node]:
    """Standard LSTM gate equations for one layer; returns (h, c)."""
    d = layer.hidden_size
    if x.shape != (layer.input_size,) or h_prev.shape != (d,):
        raise ShapeError(
            f"lstm_step: expected x {(layer.input_size,)} and h {(d,)}, "
            f"got {x.shape} and {h_prev.shape}"
        )
    hc = lstm_cell(layer.w, layer.b, x, h_prev, c_prev)
    return slice_(hc, 0, d), slice_(hc, d, 2 * d)


LstmState = List[Tuple[Node, Node]]


@dataclass
class LstmParams:
    """A stack of LSTM layers of equal hidden size."""

    layers: List[LstmLayer]

    @classmethod
    def create(
        cls,
        params: ParamSet,
        prefix: str,
        input_size: int,
        hidden_size: int,
        num_layers: int,
        rng: np.random.Generator,
    ) -> "LstmParams":
        layers = []
        for i in range(num_layers):
            n_in = input_size if i == 0 else hidden_size
            w = params.new(f"{prefix}.l{i}.w", uniform_init(rng, (4 * hidden_size, n_in + hidden_size)))
            b = params.new(f"{prefix}.l{i}.b", uniform_init(rng, (4 * hidden_size,)))
            layers.append(LstmLayer(w, b))
        return cls(layers)

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    def zero_state(self) -> LstmState:
        d = self.hidden_size
        return [(constant(np.zeros(d)), constant(np.zeros(d))) for _ in self.layers]

    def step(
        self,
        x: Node,
        state: LstmState,
        dropout: Optional["Dropout"] = None,
    ) -> LstmState:
        """Advance every layer by one token.

        Dropout, when given, hits each layer's input only, never the
        recurrent connections.
        """
        new_state: LstmState = []
        inp = x
        for layer, (h, c) in zip(self.layers, state):
            if dropout is not None:
                inp = dropout(inp)
            h, c = lstm_step(layer, inp, h, c)
            new_state.append((h, c))
            inp = h
        return new_state

    def run(self, inputs: List[Node], dropout: Optional["Dropout"] = None) -> Tuple[List[Node], LstmState]:
        """Run over a sequence; returns top-layer states and the final state."""
        state = self.zero_state()
        tops: List[Node] = []
        for x in inputs:
            state = self.step(x, state, dropout)
            tops.append(state[-1][0])
        return tops, state


# ------------------------------------------------------------------
# Dropout
# ------------------------------------------------------------------

def dropout(x: Array, rate: float, train: bool, rng: Optional[np.random.Generator]) -> Array:
    """Inverted dropout on a plain array; identity in eval mode or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(np.shape(x)) >= rate) / (1.0 - rate)
    return x * mask


class Dropout:
    """Graph-level inverted dropout bound to a mode and an rng stream."""

    def __init__(self, rate: float, train: bool, rng: Optional[np.random.Generator] = None) -> None:
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.train = train and rate > 0.0
        self.rng = rng

    def __call__(self, x: Node) -> Node:
        if not self.train:
            return x
        mask = dropout(np.ones(x.shape), self.rate, True, self.rng)
        return mul(x, constant(mask))


def embed_sequence(table: Parameter, ids: List[int]) -> List[Node]:
    """Embedding lookups for a token id sequence."""
    return [row(table, i) for i in ids]
