"""Shared likelihood-training loop for the policy, the auto-encoder and the LM."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, Tuple, TypeVar

from .ndgraph.graph import Node, ParamSet, forward_backward
from .ndgraph.nn import Dropout
from .ndgraph.optim import OptimState, Optimizer
from .ndgraph.rng import RngStreams

logger = logging.getLogger(__name__)

T = TypeVar("T")

# (item, dropout-or-None) -> (summed loss node, number of scored tokens)
LossFn = Callable[[T, Optional[Dropout]], Tuple[Node, int]]
EventFn = Callable[[str, Dict[str, Any]], None]


@dataclass
class FitSettings:
    epochs: int = 10
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    clip_norm: float = 5.0
    batch_size: int = 32
    dropout: float = 0.2
    stream: str = "fit"


@dataclass
class FitHistory:
    """Per-epoch mean token losses; ``heldout[0]`` is measured before training."""

    train: List[float] = field(default_factory=list)
    heldout: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"train": list(self.train), "heldout": list(self.heldout)}


def mean_token_loss(items: Sequence[T], loss_fn: LossFn) -> float:
    """Eval-mode loss per scored token over *items*."""
    total, tokens = 0.0, 0
    for item in items:
        loss, n = loss_fn(item, None)
        total += loss.item()
        tokens += n
    return total / max(tokens, 1)


class Trainer(Generic[T]):
    """Minibatch Adam training with clipping, driven epoch by epoch.

    Each epoch draws its shuffle and dropout masks from streams keyed by
    the epoch number, so stopping after epoch *k* and resuming gives the
    same parameters as an uninterrupted run.
    """

    def __init__(
        self,
        params: ParamSet,
        loss_fn: LossFn,
        settings: FitSettings,
        streams: RngStreams,
        state: Optional[OptimState] = None,
        on_event: Optional[EventFn] = None,
    ) -> None:
        self.params = params
        self.loss_fn = loss_fn
        self.settings = settings
        self.streams = streams
        self.state = state or OptimState.adam(
            params, lr=settings.lr, beta1=settings.beta1, beta2=settings.beta2
        )
        self.optimizer = Optimizer(params, self.state, settings.clip_norm)
        self._on_event = on_event

    def _emit(self, event: str, data: Dict[str, Any]) -> None:
        if self._on_event:
            self._on_event(event, data)

    def run_epoch(self, epoch: int, items: Sequence[T]) -> float:
        """Train one epoch (1-based); returns the mean training loss per token."""
        s = self.settings
        order = self.streams.stream(f"{s.stream}.shuffle", epoch).permutation(len(items))
        drop = Dropout(s.dropout, True, self.streams.stream(f"{s.stream}.dropout", epoch))
        batch_size = max(1, s.batch_size)
        total, tokens, pending = 0.0, 0, 0
        self.params.zero_grad()
        for pos, idx in enumerate(order, 1):
            loss, n = self.loss_fn(items[int(idx)], drop)
            forward_backward(loss)
            total += loss.item()
            tokens += n
            pending += 1
            if pending == batch_size or pos == len(order):
                self.optimizer.step(scale=1.0 / pending)
                pending = 0
            self._emit("batch", {"epoch": epoch, "done": pos, "total": len(order)})
        return total / max(tokens, 1)

    def fit(
        self,
        train: Sequence[T],
        heldout: Sequence[T] = (),
        start_epoch: int = 1,
        on_epoch_end: Optional[Callable[[int, FitHistory], None]] = None,
        history: Optional[FitHistory] = None,
    ) -> FitHistory:
        history = history or FitHistory()
        if heldout and not history.heldout:
            history.heldout.append(mean_token_loss(heldout, self.loss_fn))
        for epoch in range(start_epoch, self.settings.epochs + 1):
            self._emit("epoch_start", {"epoch": epoch, "epochs": self.settings.epochs})
            history.train.append(self.run_epoch(epoch, train))
            if heldout:
                history.heldout.append(mean_token_loss(heldout, self.loss_fn))
            logger.info(
                "epoch %d/%d train=%.4f heldout=%s",
                epoch, self.settings.epochs, history.train[-1],
                f"{history.heldout[-1]:.4f}" if heldout else "-",
            )
            self._emit("epoch_end", {"epoch": epoch, **history.to_dict()})
            if on_epoch_end is not None:
                on_epoch_end(epoch, history)
        return history


def fit(
    params: ParamSet,
    loss_fn: LossFn,
    train: Sequence[T],
    heldout: Sequence[T],
    settings: FitSettings,
    streams: RngStreams,
    on_event: Optional[EventFn] = None,
) -> FitHistory:
    """One-shot convenience wrapper around :class:`Trainer`."""
    return Trainer(params, loss_fn, settings, streams, on_event=on_event).fit(train, heldout)

