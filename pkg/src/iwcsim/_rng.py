"""Named random streams derived from one root seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for subsystem ``name``; ``extra`` keys sub-streams (e.g. agent ids)."""
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))] + [int(e) for e in extra]
    return np.random.default_rng(np.random.SeedSequence(key))
