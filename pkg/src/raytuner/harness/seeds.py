"""Named random sub-streams derived from one root seed.

Every consumer asks for its stream by name (and optional indices), so adding
or reordering calls in one part of an experiment never shifts the numbers
another part sees.
"""

import zlib

import numpy as np

DEVICE = "device"
NOISE = "noise"
INIT = "init"
SHUFFLE = "shuffle"
ORIGINS = "origins"
STARTS = "starts"


def seed_sequence(root: int, name: str, *idx: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=root, spawn_key=(zlib.crc32(name.encode()), *idx))


def derive_seed(root: int, name: str, *idx: int) -> int:
    """A 32-bit integer seed for APIs that take plain ints."""
    return int(seed_sequence(root, name, *idx).generate_state(1)[0])


def generator(root: int, name: str, *idx: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(root, name, *idx))
