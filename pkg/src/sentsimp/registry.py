"""Component registry: resolve checkpoint component tags to model classes."""

from __future__ import annotations

from typing import Any, Dict, Protocol, Type, runtime_checkable

from .errors import CheckpointError
from .ndgraph.graph import ParamSet


@runtime_checkable
class Model(Protocol):
    """What a checkpointable model exposes."""

    params: ParamSet

    def dims(self) -> Dict[str, int]: ...


BUILTIN_COMPONENTS: Dict[str, Type[Any]] = {}


def _lazy_load_builtins() -> None:
    """Lazily populate the built-in registry on first use."""
    if BUILTIN_COMPONENTS:
        return
    from .lexsimp import LexSimpParams
    from .rewardmodels import LmParams, SaeParams
    from .seq2seq import Seq2SeqParams

    BUILTIN_COMPONENTS.update({
        "seq2seq": Seq2SeqParams,
        "sae": SaeParams,
        "lm": LmParams,
        "lexsimp": LexSimpParams,
    })


def _unknown(name: str) -> CheckpointError:
    available = ", ".join(sorted(BUILTIN_COMPONENTS))
    return CheckpointError(f"Unknown component '{name}'. Built-in components: {available}.")


def component_tag(model: Model) -> str:
    _lazy_load_builtins()
    for tag, cls in BUILTIN_COMPONENTS.items():
        if type(model) is cls:
            return tag
    raise _unknown(type(model).__qualname__)


def resolve_component(name: str) -> Type[Any]:
    """Resolve a built-in component tag (``seq2seq``, ``sae``, ``lm`` or ``lexsimp``).

    Raises:
        CheckpointError: If the tag is not registered.
    """
    _lazy_load_builtins()
    if name not in BUILTIN_COMPONENTS:
        raise _unknown(name)
    return BUILTIN_COMPONENTS[name]


def build_model(name: str, dims: Dict[str, int]) -> Model:
    """Allocate an empty model of the given component and dimensions."""
    cls = resolve_component(name)
    try:
        return cls.from_dims(dims)  # type: ignore[no-any-return]
    except KeyError as exc:
        raise CheckpointError(f"checkpoint dims for '{name}' lack {exc}") from exc
