"""Deterministic random-stream layout shared by every simulator.

Trials are split into fixed blocks of 4096.  Block i of a simulation tagged
`tag` draws from a Philox generator seeded with

    SeedSequence(entropy=[seed & (2**64-1), blake2s_64(tag), i])

where blake2s_64 is the first 8 bytes of blake2s of the tag string.  Inside a
block, draws happen in trial order.  Results are reduced with commutative
integer sums, so estimates are byte-for-byte identical no matter how blocks
are scheduled across threads (NAKLAB_THREADS only changes wall time).
"""

import hashlib

import numpy as np

from .errors import ParameterError

BLOCK = 4096
_MASK64 = (1 << 64) - 1


def _tag_word(tag: str) -> int:
    return int.from_bytes(hashlib.blake2s(tag.encode(), digest_size=8).digest(), "big")


def substream(seed: int, tag: str, block_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=[int(seed) & _MASK64, _tag_word(tag), int(block_index)])
    return np.random.Generator(np.random.Philox(seq))


def block_layout(trials: int) -> list[tuple[int, int]]:
    """(block_index, trials_in_block) pairs covering `trials`."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    full, rem = divmod(int(trials), BLOCK)
    out = [(i, BLOCK) for i in range(full)]
    if rem:
        out.append((full, rem))
    return out
