"""REINFORCE training of the encoder-decoder policy.

Each training pair is handled in two parts: the first ``L`` gold target
tokens are teacher-forced and trained by likelihood, and the policy then
samples the rest of the sentence and is trained on its reward, centered
by a linear baseline regressor over ``[h_t; c_t]``.  ``L`` follows a
curriculum that shrinks by a fixed step every few epochs until it hits
zero.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ScheduleError, ShapeError
from .ndgraph.graph import GradientSet, Node, add, add_all, forward_backward, pick, scale
from .ndgraph.optim import OptimState, Optimizer
from .ndgraph.rng import RngStreams
from .rewardmodels import RewardBreakdown, RewardContext
from .seq2seq import (
    DecodeStep,
    Seq2SeqParams,
    StepMixer,
    choose,
    decode,
    decode_step,
    default_max_len,
    encode,
)
from .textproc import BOS, EOS
from .training import EventFn

logger = logging.getLogger(__name__)

Pair = Tuple[List[int], List[int]]

CURRICULUM_START = 24
CURRICULUM_STEP = 3
CURRICULUM_PERIOD = 2

STATS_FIELDS = ("epoch", "L", "mean_reward", "mean_r_s", "mean_r_r", "mean_r_f", "mean_nll")


# ------------------------------------------------------------------
# Curriculum
# ------------------------------------------------------------------

def curriculum_L(
    epoch: int,
    start: int = CURRICULUM_START,
    step: int = CURRICULUM_STEP,
    period: int = CURRICULUM_PERIOD,
) -> Optional[int]:
    """Teacher-forced prefix length for *epoch*; ``None`` means training is over."""
    if epoch < 1:
        raise ScheduleError(f"epoch must be >= 1, got {epoch}")
    value = start - step * ((epoch - 1) // period)
    return value if value > 0 else None


def curriculum(
    start: int = CURRICULUM_START,
    step: int = CURRICULUM_STEP,
    period: int = CURRICULUM_PERIOD,
) -> List[int]:
    """Every epoch's L, in order, up to termination."""
    out: List[int] = []
    epoch = 1
    while (value := curriculum_L(epoch, start, step, period)) is not None:
        out.append(value)
        epoch += 1
    return out


# ------------------------------------------------------------------
# Rollouts and the baseline
# ------------------------------------------------------------------

@dataclass
class Rollout:
    """A sampled continuation and everything needed to learn from it."""

    actions: List[int]
    log_probs: List[Node]
    features: List[np.ndarray]
    reward: RewardBreakdown
    prefix: List[int] = field(default_factory=list)
    prefix_log_probs: List[Node] = field(default_factory=list)

    @property
    def output(self) -> List[int]:
        """Prefix plus sampled actions, EOS dropped."""
        return self.prefix + [a for a in self.actions if a != EOS]


def rollout(
    params: Seq2SeqParams,
    source_ids: Sequence[int],
    context: RewardContext,
    rng: np.random.Generator,
    reference_ids: Sequence[int],
    prefix_ids: Sequence[int] = (),
    max_len: Optional[int] = None,
    mixer: Optional[StepMixer] = None,
) -> Rollout:
    """Teacher-force *prefix_ids*, then sample actions until EOS or *max_len*.

    *max_len* bounds the whole output (prefix included); at least one
    action is always sampled.  The reward is computed on the output with
    EOS removed.
    """
    max_len = default_max_len(len(source_ids)) if max_len is None else max_len
    enc = encode(params, source_ids)
    state = enc.final
    prev = BOS
    prefix_lps: List[Node] = []
    for y in prefix_ids:
        step = decode_step(params, prev, state, enc)
        prefix_lps.append(pick(step.log_probs, y))
        state, prev = step.state, y

    actions: List[int] = []
    log_probs: List[Node] = []
    features: List[np.ndarray] = []
    for _ in range(max(1, max_len - len(prefix_ids))):
        step = decode_step(params, prev, state, enc)
        y = choose(mixer(step) if mixer is not None else step.dist, "sample", rng)
        actions.append(y)
        log_probs.append(pick(step.log_probs, y))
        features.append(step_features(step))
        if y == EOS:
            break
        state, prev = step.state, y

    out = Rollout(actions, log_probs, features, RewardBreakdown(0.0, 0.0, 0.0, 0.0),
                  list(prefix_ids), prefix_lps)
    out.reward = context.score(list(source_ids), out.output, list(reference_ids))
    return out


def step_features(step: DecodeStep) -> np.ndarray:
    return np.concatenate([step.hidden.value, step.context.value])


@dataclass
class BaselineParams:
    """Linear regressor from ``[h_t; c_t]`` to expected reward."""

    weights: np.ndarray
    bias: float = 0.0

    @classmethod
    def zeros(cls, hidden_size: int) -> "BaselineParams":
        return cls(np.zeros(2 * hidden_size), 0.0)

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {"baseline.w": self.weights.copy(), "baseline.b": np.array([self.bias])}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "BaselineParams":
        return cls(np.array(arrays["baseline.w"], dtype=np.float64), float(arrays["baseline.b"][0]))


def _features(h_t: np.ndarray, c_t: Optional[np.ndarray]) -> np.ndarray:
    return np.asarray(h_t, dtype=np.float64) if c_t is None else np.concatenate([h_t, c_t])


def baseline_predict(b: BaselineParams, h_t: np.ndarray, c_t: Optional[np.ndarray] = None) -> float:
    """Affine prediction ``w . [h_t; c_t] + bias``.

    Pass the concatenated features as *h_t* alone when *c_t* is omitted.
    """
    x = _features(h_t, c_t)
    if x.shape != b.weights.shape:
        raise ShapeError(f"baseline expects {b.weights.shape[0]} features, got {x.shape}")
    return float(b.weights @ x) + b.bias


def baseline_update(b: BaselineParams, roll: Rollout, lr: float) -> BaselineParams:
    """One SGD step on ``sum_t (b_t - r)^2`` with the features held fixed."""
    r = roll.reward.total
    grad_w = np.zeros_like(b.weights)
    grad_b = 0.0
    for x in roll.features:
        err = baseline_predict(b, x) - r
        grad_w += 2.0 * err * x
        grad_b += 2.0 * err
    return BaselineParams(b.weights - lr * grad_w, b.bias - lr * grad_b)


def policy_loss(roll: Rollout, baseline: BaselineParams) -> Optional[Node]:
    """``-sum_t (r - b_t) log p(a_t)``; ``None`` for an empty rollout."""
    r = roll.reward.total
    terms = [
        scale(lp, -(r - baseline_predict(baseline, x)))
        for lp, x in zip(roll.log_probs, roll.features)
    ]
    return add_all(terms) if terms else None


def reinforce_gradients(params: Seq2SeqParams, roll: Rollout, baseline: BaselineParams) -> GradientSet:
    """Accumulate the policy-gradient estimate into the parameters' ``grad``.

    The sign is that of a loss, so a descent step raises expected reward.
    """
    loss = policy_loss(roll, baseline)
    if loss is None:
        return {}
    return forward_backward(loss)


# ------------------------------------------------------------------
# Training
# ------------------------------------------------------------------

@dataclass
class RlSettings:
    lr: float = 0.01
    baseline_lr: float = 0.01
    clip_norm: float = 5.0
    curriculum_start: int = CURRICULUM_START
    curriculum_step: int = CURRICULUM_STEP
    curriculum_period: int = CURRICULUM_PERIOD
    max_len_factor: float = 1.5


@dataclass
class EpochStats:
    epoch: int
    L: int
    mean_reward: float
    mean_r_s: float
    mean_r_r: float
    mean_r_f: float
    mean_nll: float

    def to_row(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in STATS_FIELDS}


def train_rl_epoch(
    params: Seq2SeqParams,
    baseline: BaselineParams,
    pairs: Sequence[Pair],
    L: int,
    context: RewardContext,
    settings: RlSettings,
    streams: RngStreams,
    epoch: int,
    on_event: Optional[EventFn] = None,
) -> Tuple[BaselineParams, EpochStats]:
    """One pass of mixed likelihood / REINFORCE training with per-pair SGD updates.

    Targets must end with EOS.  Pairs whose target fits within ``L`` are
    trained by likelihood only.
    """
    optimizer = Optimizer(params.params, OptimState.sgd(settings.lr), settings.clip_norm)
    order = streams.stream("rl.shuffle", epoch).permutation(len(pairs))
    rng = streams.stream("rl.rollout", epoch)
    rewards: List[RewardBreakdown] = []
    nll_total, nll_tokens = 0.0, 0
    params.params.zero_grad()
    for done, idx in enumerate(order, 1):
        src, tgt = pairs[int(idx)]
        if L >= len(tgt):
            prefix = list(tgt)
            lps = _teacher_forced(params, src, prefix)
            loss: Optional[Node] = scale(add_all(lps), -1.0)
            nll_total -= sum(lp.item() for lp in lps)
            nll_tokens += len(lps)
        else:
            roll = rollout(
                params, src, context, rng, tgt[:-1] if tgt[-1] == EOS else tgt,
                prefix_ids=tgt[:L], max_len=max(L + 1, default_max_len(len(src), settings.max_len_factor)),
            )
            rewards.append(roll.reward)
            loss = policy_loss(roll, baseline)
            if roll.prefix_log_probs:
                nll = scale(add_all(roll.prefix_log_probs), -1.0)
                nll_total += nll.item()
                nll_tokens += len(roll.prefix_log_probs)
                loss = nll if loss is None else add(loss, nll)
            baseline = baseline_update(baseline, roll, settings.baseline_lr)
        if loss is not None:
            forward_backward(loss)
            optimizer.step()
        if on_event:
            on_event("batch", {"epoch": epoch, "done": done, "total": len(pairs)})

    def mean(values: List[float]) -> float:
        return float(np.mean(values)) if values else 0.0

    stats = EpochStats(
        epoch=epoch,
        L=L,
        mean_reward=mean([r.total for r in rewards]),
        mean_r_s=mean([r.r_s for r in rewards]),
        mean_r_r=mean([r.r_r for r in rewards]),
        mean_r_f=mean([r.r_f for r in rewards]),
        mean_nll=nll_total / max(nll_tokens, 1),
    )
    logger.info(
        "RL epoch %d L=%d reward=%.4f nll=%.4f (%d rollouts)",
        epoch, L, stats.mean_reward, stats.mean_nll, len(rewards),
    )
    return baseline, stats


def _teacher_forced(params: Seq2SeqParams, src: Sequence[int], tgt: Sequence[int]) -> List[Node]:
    enc = encode(params, src)
    state, prev = enc.final, BOS
    out: List[Node] = []
    for y in tgt:
        step = decode_step(params, prev, state, enc)
        out.append(pick(step.log_probs, y))
        state, prev = step.state, y
    return out


def train_rl(
    params: Seq2SeqParams,
    pairs: Sequence[Pair],
    context: RewardContext,
    settings: RlSettings,
    streams: RngStreams,
    baseline: Optional[BaselineParams] = None,
    start_epoch: int = 1,
    max_epochs: Optional[int] = None,
    on_epoch_end: Optional[Callable[[EpochStats, BaselineParams], None]] = None,
    on_event: Optional[EventFn] = None,
) -> Tuple[BaselineParams, List[EpochStats]]:
    """Run the curriculum from *start_epoch* until it terminates."""
    baseline = baseline if baseline is not None else BaselineParams.zeros(params.hidden_size)
    history: List[EpochStats] = []
    epoch = start_epoch
    while True:
        L = curriculum_L(epoch, settings.curriculum_start, settings.curriculum_step, settings.curriculum_period)
        if L is None or (max_epochs is not None and epoch >= start_epoch + max_epochs):
            break
        if on_event:
            on_event("epoch_start", {"epoch": epoch, "L": L})
        baseline, stats = train_rl_epoch(params, baseline, pairs, L, context, settings, streams, epoch, on_event)
        history.append(stats)
        if on_epoch_end is not None:
            on_epoch_end(stats, baseline)
        epoch += 1
    return baseline, history


def mean_policy_reward(
    params: Seq2SeqParams,
    pairs: Sequence[Pair],
    context: RewardContext,
    mixer: Optional[StepMixer] = None,
) -> float:
    """Mean composite reward of greedy outputs, e.g. on a validation split."""
    if not pairs:
        return 0.0
    total = 0.0
    for src, tgt in pairs:
        out = decode(params, src, "greedy", mixer=mixer).ids
        ref = tgt[:-1] if tgt and tgt[-1] == EOS else tgt
        total += context.score(src, out, ref).total
    return total / len(pairs)


def write_stats_csv(path: Path, stats: Sequence[EpochStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(STATS_FIELDS))
        writer.writeheader()
        for s in stats:
            writer.writerow(s.to_row())


def read_stats_csv(path: Path) -> List[EpochStats]:
    with open(path, newline="", encoding="utf-8") as f:
        return [
            EpochStats(
                epoch=int(row["epoch"]),
                L=int(row["L"]),
                mean_reward=float(row["mean_reward"]),
                mean_r_s=float(row["mean_r_s"]),
                mean_r_r=float(row["mean_r_r"]),
                mean_r_f=float(row["mean_r_f"]),
                mean_nll=float(row["mean_nll"]),
            )
            for row in csv.DictReader(f)
        ]
