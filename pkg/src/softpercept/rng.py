"""Named random sub-streams derived from one 64-bit seed."""

import zlib

import numpy as np

STREAMS = ("sim", "init", "shuffle", "sample", "tsne", "probe")


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for component ``name`` under the global ``seed``.

    ``extra`` integers further split the stream (episode index, trial, ...).
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    key = (zlib.crc32(name.encode()),) + tuple(int(e) for e in extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))
