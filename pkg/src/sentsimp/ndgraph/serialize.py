"""The ``DRESS1`` parameter container.

Layout::

    b"DRESS1"                  magic
    u32 little-endian          schema version
    u32 little-endian          header length in bytes
    header                     UTF-8 JSON: component tag, metadata, shape table
    payload                    arrays in shape-table order, little-endian float64

The header is written with sorted keys so equal inputs give
byte-identical files.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..errors import CheckpointError
from .graph import Array

logger = logging.getLogger(__name__)

MAGIC = b"DRESS1"
SCHEMA_VERSION = 1
_PREFIX = struct.Struct("<II")
_DTYPE = np.dtype("<f8")


@dataclass
class Container:
    """A tagged bundle of named float64 arrays plus JSON metadata."""

    component: str
    arrays: Dict[str, Array] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)


def dumps(container: Container) -> bytes:
    shapes = [
        {"name": name, "shape": list(np.shape(arr))}
        for name, arr in container.arrays.items()
    ]
    header = {
        "component": container.component,
        "meta": container.meta,
        "arrays": shapes,
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    parts = [MAGIC, _PREFIX.pack(SCHEMA_VERSION, len(header_bytes)), header_bytes]
    for arr in container.arrays.values():
        parts.append(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes())
    return b"".join(parts)


def loads(data: bytes, component: Optional[str] = None) -> Container:
    """Parse a container, optionally insisting on its component tag.

    Raises:
        CheckpointError: bad magic, unsupported schema version, truncated
            payload, or a different component than requested.
    """
    if not data.startswith(MAGIC):
        raise CheckpointError("not a DRESS1 container (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + _PREFIX.size:
        raise CheckpointError("truncated container header")
    version, header_len = _PREFIX.unpack_from(data, offset)
    if version != SCHEMA_VERSION:
        raise CheckpointError(
            f"container schema version {version} is not supported (expected {SCHEMA_VERSION})"
        )
    offset += _PREFIX.size
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt container header: {e}") from e
    offset += header_len

    tag = header.get("component", "")
    if component is not None and tag != component:
        raise CheckpointError(f"expected a '{component}' checkpoint, found '{tag}'")

    arrays: Dict[str, Array] = {}
    for entry in header.get("arrays", []):
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * _DTYPE.itemsize
        if offset + nbytes > len(data):
            raise CheckpointError(f"truncated payload at array '{entry['name']}'")
        arr = np.frombuffer(data, dtype=_DTYPE, count=count, offset=offset)
        arrays[entry["name"]] = arr.astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes after payload")
    return Container(tag, arrays, header.get("meta", {}))


def save(path: Path, container: Container) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(container))
    logger.debug("Wrote %s container to %s", container.component, path)


def load(path: Path, component: Optional[str] = None) -> Container:
    return loads(Path(path).read_bytes(), component)
