"""Stable derivation of child seeds from a master seed and integer keys.

Every random stream in the pipeline is keyed by *what* it is for (tree
index, fold index, recording index, ...) rather than by call order, so
results do not depend on scheduling or worker count.
"""
import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]]))
