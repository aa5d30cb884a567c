"""Layered configuration for sentsimp.

Resolution order (later overrides earlier):
  1. Built-in defaults (or the ``desk`` preset for minutes-scale runs)
  2. A config file: flat ``key=value`` text, ``.yaml``/``.yml`` or ``.json``
  3. CLI overrides (``--set key=value``)
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

from .errors import ConfigError
from .reinforce import RlSettings
from .rewardmodels import RewardWeights
from .training import FitSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Config:
    """Every knob of the pipeline; defaults follow the published training setup."""

    # model
    hidden_size: int = 256
    num_layers: int = 2
    dropout: float = 0.2
    embeddings_path: str = ""

    # likelihood training (policy, auto-encoder, LM, lexical model)
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    clip_norm: float = 5.0
    batch_size: int = 32
    epochs: int = 10
    sae_epochs: int = 5
    lm_epochs: int = 5
    lexsimp_epochs: int = 5
    heldout_size: int = 100

    # reinforcement learning
    rl_lr: float = 0.01
    baseline_lr: float = 0.01
    curriculum_start: int = 24
    curriculum_step: int = 3
    curriculum_period: int = 2

    # reward
    lambda_s: float = 1.0
    lambda_r: float = 0.25
    lambda_f: float = 0.5
    beta: float = 0.1

    # decoding
    eta: float = 0.1
    max_len_factor: float = 1.5

    # data
    seed: int = 1234
    min_count: int = 3

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def fit_settings(self, epochs: int, stream: str) -> FitSettings:
        return FitSettings(
            epochs=epochs,
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            clip_norm=self.clip_norm,
            batch_size=self.batch_size,
            dropout=self.dropout,
            stream=stream,
        )

    def rl_settings(self) -> RlSettings:
        return RlSettings(
            lr=self.rl_lr,
            baseline_lr=self.baseline_lr,
            clip_norm=self.clip_norm,
            curriculum_start=self.curriculum_start,
            curriculum_step=self.curriculum_step,
            curriculum_period=self.curriculum_period,
            max_len_factor=self.max_len_factor,
        )

    def reward_weights(self) -> RewardWeights:
        return RewardWeights(self.lambda_s, self.lambda_r, self.lambda_f, self.beta)


DESK_PRESET: Dict[str, Any] = {
    "hidden_size": 64,
    "batch_size": 16,
    "epochs": 6,
    "sae_epochs": 3,
    "lm_epochs": 3,
    "lexsimp_epochs": 4,
    "heldout_size": 50,
    "curriculum_start": 12,
}

# (low, high) inclusive; None leaves a side open.
_RANGES: Dict[str, Tuple[Optional[float], Optional[float]]] = {
    "hidden_size": (1, None),
    "num_layers": (1, None),
    "dropout": (0.0, 0.999999),
    "lr": (1e-12, None),
    "beta1": (0.0, 0.999999),
    "beta2": (0.0, 0.999999),
    "clip_norm": (1e-12, None),
    "batch_size": (1, None),
    "epochs": (0, None),
    "sae_epochs": (0, None),
    "lm_epochs": (0, None),
    "lexsimp_epochs": (0, None),
    "heldout_size": (0, None),
    "rl_lr": (1e-12, None),
    "baseline_lr": (0.0, None),
    "curriculum_start": (1, None),
    "curriculum_step": (1, None),
    "curriculum_period": (1, None),
    "lambda_s": (0.0, 1.0),
    "lambda_r": (0.0, 1.0),
    "lambda_f": (0.0, 1.0),
    "beta": (0.0, 1.0),
    "eta": (0.0, 1.0),
    "max_len_factor": (0.0, None),
    "seed": (0, 2**32 - 1),
    "min_count": (0, None),
}

_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _coerce(key: str, raw: Any) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key '{key}'")
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("int", int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            value: Any = int(raw)
        elif kind in ("float", float):
            value = float(raw)
        else:
            value = "" if raw is None else str(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config key '{key}' expects {kind}, got {raw!r}") from e
    low, high = _RANGES.get(key, (None, None))
    if (low is not None and value < low) or (high is not None and value > high):
        raise ConfigError(f"config key '{key}'={value} outside [{low}, {high}]")
    return value


def apply_values(config: Config, values: Dict[str, Any]) -> Config:
    """Return *config* with validated *values* applied."""
    return replace(config, **{k: _coerce(k, v) for k, v in values.items()})


def parse_assignments(lines: Iterable[str], source: str = "<overrides>") -> Dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out: Dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file '{path}' not found")
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    if suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    elif suffix == ".json":
        data = json.loads(text)
    else:
        return parse_assignments(text.splitlines(), str(path))
    if not isinstance(data, dict):
        raise ConfigError(f"config file '{path}' must hold a flat mapping")
    return data


def load_config(
    path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    desk: bool = False,
) -> Config:
    """Resolve defaults, the optional file, then ``key=value`` overrides."""
    config = apply_values(Config(), DESK_PRESET) if desk else Config()
    if path is not None:
        config = apply_values(config, read_config_file(path))
        logger.debug("Loaded config file %s", path)
    override_values = parse_assignments(overrides)
    if override_values:
        config = apply_values(config, override_values)
    return config


def save_config(config: Config, path: Path) -> None:
    Path(path).write_text(
        "".join(f"{k}={v}\n" for k, v in config.to_dict().items()), encoding="utf-8"
    )


def print_env(config: Config, path: Optional[Path] = None, desk: bool = False) -> str:
    """Return a formatted description of the resolved configuration."""
    lines = ["sentsimp configuration", "=" * 50, ""]
    lines.append(f"  Config file:  {path or '(none)'}")
    lines.append(f"  Preset:       {'desk' if desk else 'default'}")
    lines.append("")
    defaults = Config().to_dict()
    for key, value in config.to_dict().items():
        marker = "" if defaults[key] == value else "  *"
        lines.append(f"  {key:<18} {value}{marker}")
    lines.append("")
    return "\n".join(lines)
