"""Gradient clipping and the SGD / Adam update rules."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ShapeError
from .graph import Array, ParamSet

logger = logging.getLogger(__name__)

ADAM_LR = 0.001
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def global_norm(grads: Sequence[Array]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_gradients(grads: Sequence[Array], max_norm: float) -> List[Array]:
    """Rescale *grads* so their global L2 norm is at most *max_norm*.

    Returns new arrays; direction is preserved exactly.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return [np.array(g, copy=True) for g in grads]
    factor = max_norm / norm
    logger.debug("clipping gradient norm %.4f to %.4f", norm, max_norm)
    return [g * factor for g in grads]


def _check_shapes(params: ParamSet, grads: Sequence[Array]) -> None:
    if len(grads) != len(params):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(g) != p.shape:
            raise ShapeError(f"gradient for '{p.name}' has shape {np.shape(g)}, expected {p.shape}")


def sgd_step(params: ParamSet, grads: Sequence[Array], lr: float) -> None:
    """In place: ``param <- param - lr * grad``."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    _check_shapes(params, grads)
    for p, g in zip(params, grads):
        p.value = p.value - lr * g


@dataclass
class OptimState:
    """Optimizer bookkeeping; moments are keyed by parameter name."""

    method: str = "adam"
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step: int = 0
    m: Dict[str, Array] = field(default_factory=dict)
    v: Dict[str, Array] = field(default_factory=dict)

    @classmethod
    def adam(
        cls,
        params: ParamSet,
        lr: float = ADAM_LR,
        beta1: float = ADAM_BETA1,
        beta2: float = ADAM_BETA2,
        eps: float = ADAM_EPS,
    ) -> "OptimState":
        return cls(
            method="adam",
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m={p.name: np.zeros_like(p.value) for p in params},
            v={p.name: np.zeros_like(p.value) for p in params},
        )

    @classmethod
    def sgd(cls, lr: float) -> "OptimState":
        return cls(method="sgd", lr=lr)

    def arrays(self) -> Dict[str, Array]:
        """Moment arrays flattened for checkpointing."""
        out = {f"m/{k}": v for k, v in self.m.items()}
        out.update({f"v/{k}": v for k, v in self.v.items()})
        return out

    def meta(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "step": self.step,
        }

    @classmethod
    def restore(cls, meta: Dict[str, object], arrays: Dict[str, Array]) -> "OptimState":
        state = cls(
            method=str(meta["method"]),
            lr=float(meta["lr"]),  # type: ignore[arg-type]
            beta1=float(meta["beta1"]),  # type: ignore[arg-type]
            beta2=float(meta["beta2"]),  # type: ignore[arg-type]
            eps=float(meta["eps"]),  # type: ignore[arg-type]
            step=int(meta["step"]),  # type: ignore[call-overload]
        )
        for key, value in arrays.items():
            kind, _, name = key.partition("/")
            (state.m if kind == "m" else state.v)[name] = value
        return state


def adam_step(state: OptimState, params: ParamSet, grads: Sequence[Array]) -> None:
    """One bias-corrected Adam update, in place; increments ``state.step``."""
    _check_shapes(params, grads)
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g in zip(params, grads):
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None or v is None or m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"optimizer state does not cover parameter '{p.name}' {p.shape}")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[p.name], state.v[p.name] = m, v
        p.value = p.value - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


class Optimizer:
    """Clip, update and zero in one call, for the training loops."""

    def __init__(self, params: ParamSet, state: OptimState, clip_norm: Optional[float] = None) -> None:
        self.params = params
        self.state = state
        self.clip_norm = clip_norm

    def step(self, scale: float = 1.0) -> float:
        """Apply accumulated gradients (times *scale*); returns the pre-clip norm."""
        grads = self.params.grads()
        if scale != 1.0:
            grads = [g * scale for g in grads]
        norm = global_norm(grads)
        if self.clip_norm is not None:
            grads = clip_gradients(grads, self.clip_norm)
        if self.state.method == "adam":
            adam_step(self.state, self.params, grads)
        else:
            sgd_step(self.params, grads, self.state.lr)
            self.state.step += 1
        self.params.zero_grad()
        return norm
