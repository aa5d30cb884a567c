"""Model checkpoints: parameters, vocabulary, config and training state in one container."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .errors import CheckpointError, MissingArtifactError
from .ndgraph import serialize
from .registry import Model, build_model, component_tag
from .textproc import Vocab

logger = logging.getLogger(__name__)

_PARAM = "param/"
_EXTRA = "extra/"


@dataclass
class Checkpoint:
    component: str
    model: Any
    vocab: Vocab
    config: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, np.ndarray] = field(default_factory=dict)


def save_checkpoint(
    path: Path,
    model: Model,
    vocab: Vocab,
    config: Dict[str, Any],
    metadata: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, np.ndarray]] = None,
) -> None:
    """Write *model* and its context to *path*.

    *extra* holds auxiliary arrays (optimizer moments, the RL baseline)
    needed to resume training.
    """
    arrays = {f"{_PARAM}{p.name}": p.value for p in model.params}
    for name, arr in (extra or {}).items():
        arrays[f"{_EXTRA}{name}"] = np.asarray(arr, dtype=np.float64)
    tag = component_tag(model)
    meta = {
        "dims": model.dims(),
        "vocab": vocab.to_dict(),
        "config": config,
        "metadata": metadata or {},
    }
    serialize.save(path, serialize.Container(tag, arrays, meta))
    logger.info("Saved %s checkpoint to %s", tag, path)


def load_checkpoint(path: Path, component: Optional[str] = None, stage: Optional[str] = None) -> Checkpoint:
    """Read a checkpoint, optionally requiring a component tag.

    Raises:
        MissingArtifactError: if *path* does not exist (naming *stage* when given).
        CheckpointError: on a malformed file or a component mismatch.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(stage or component or "train", path)
    container = serialize.load(path, component)
    meta = container.meta
    try:
        model = build_model(container.component, meta["dims"])
        vocab = Vocab.from_dict(meta["vocab"])
    except KeyError as exc:
        raise CheckpointError(f"{path}: checkpoint header lacks {exc}") from exc
    params = {
        k[len(_PARAM):]: v for k, v in container.arrays.items() if k.startswith(_PARAM)
    }
    extra = {
        k[len(_EXTRA):]: v for k, v in container.arrays.items() if k.startswith(_EXTRA)
    }
    model.params.load_arrays(params)
    return Checkpoint(
        component=container.component,
        model=model,
        vocab=vocab,
        config=dict(meta.get("config", {})),
        metadata=dict(meta.get("metadata", {})),
        extra=extra,
    )
