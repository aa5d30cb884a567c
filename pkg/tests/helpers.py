"""Gradient-check and file helpers shared by the test modules."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, Iterable

import numpy as np

from sentsimp.ndgraph.graph import Node, Parameter, forward_backward


def numeric_grad(loss_fn: Callable[[], Node], param: Parameter, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``loss_fn()`` with respect to *param*."""
    grad = np.zeros_like(param.value)
    for idx in np.ndindex(param.shape):
        orig = param.value[idx]
        param.value[idx] = orig + eps
        up = loss_fn().item()
        param.value[idx] = orig - eps
        down = loss_fn().item()
        param.value[idx] = orig
        grad[idx] = (up - down) / (2 * eps)
    return grad


def analytic_grads(loss_fn: Callable[[], Node], params: Iterable[Parameter]) -> Dict[str, np.ndarray]:
    params = list(params)
    for p in params:
        p.zero_grad()
    forward_backward(loss_fn())
    return {p.name: (p.grad if p.grad is not None else np.zeros_like(p.value)).copy() for p in params}


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, rtol: float = 1e-4) -> None:
    scale = max(1e-2, float(np.abs(numeric).max()))
    assert np.abs(analytic - numeric).max() <= rtol * scale


def write_lines(path: Path, lines: Iterable[str]) -> Path:
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path
