"""Minimal reverse-mode autodiff and the neural blocks built on it."""

from .graph import (
    Array,
    GradientSet,
    Node,
    Parameter,
    ParamSet,
    constant,
    forward_backward,
    softmax,
)
from .nn import Dropout, LstmLayer, LstmParams, dropout, lstm_step, uniform_init
from .optim import OptimState, Optimizer, adam_step, clip_gradients, global_norm, sgd_step
from .rng import RngStreams
from .serialize import MAGIC, SCHEMA_VERSION, Container

__all__ = [
    "Array",
    "Container",
    "Dropout",
    "GradientSet",
    "LstmLayer",
    "LstmParams",
    "MAGIC",
    "Node",
    "OptimState",
    "Optimizer",
    "ParamSet",
    "Parameter",
    "RngStreams",
    "SCHEMA_VERSION",
    "adam_step",
    "clip_gradients",
    "constant",
    "dropout",
    "forward_backward",
    "global_norm",
    "lstm_step",
    "sgd_step",
    "softmax",
    "uniform_init",
]
