"""Seedable, splittable random streams.

Each component asks for a stream by name (``"init.policy"``,
``"dropout"``, ``"rollout"``...) plus optional integer keys such as the
epoch, so adding a consumer never shifts the draws of another.
"""

from __future__ import annotations

import zlib
from typing import Tuple

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class RngStreams:
    def __init__(self, seed: int) -> None:
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = seed

    def entropy(self, name: str, *keys: int) -> Tuple[int, ...]:
        return (self.seed, _name_key(name), *keys)

    def stream(self, name: str, *keys: int) -> np.random.Generator:
        """A fresh generator; equal (seed, name, keys) give identical draws."""
        seq = np.random.SeedSequence(list(self.entropy(name, *keys)))
        return np.random.Generator(np.random.PCG64(seq))

    def __repr__(self) -> str:
        return f"RngStreams(seed={self.seed})"
