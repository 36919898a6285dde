"""Reproducible random streams

Every trial draws from its own counter-based Philox generator keyed by a
64-bit seed derived from (master seed, stream tag, trial index), so results
never depend on the order in which a worker pool schedules trials.
"""

import zlib

import numpy as np


def stream_tag(label: str) -> int:
    """Stable 32-bit tag for a named stream (platform independent, unlike hash())"""
    return zlib.crc32(label.encode("utf-8"))


def trial_seed(master_seed: int, trial_index: int, stream: str = "trial") -> int:
    """64-bit per-trial seed"""
    sequence = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, stream_tag(stream), int(trial_index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed"""
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def trial_generator(master_seed: int, trial_index: int, stream: str = "trial") -> np.random.Generator:
    return generator(trial_seed(master_seed, trial_index, stream))
