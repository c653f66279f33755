"""Seed-stream discipline.

All randomness flows from one root seed. Components derive independent
substreams as (root, crc32(stream_name)) fed to a SeedSequence, so parallel
chains and re-ordered work see identical streams.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(root_seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([root_seed, key]))
