"""
This module derives reproducible random streams.

A stream is keyed by (seed, experiment, chunk). Work is always split into
chunks of a fixed size, so the set of streams does not depend on the number
of worker threads.
"""

import zlib
from typing import List

import numpy as np


CHUNK_SIZE = 4096


def experiment_code(experiment: str) -> int:
    """
    Returns a stable 32-bit code for an experiment name.
    """
    return zlib.crc32(experiment.encode("utf-8"))


def make_stream(seed: int, experiment: str, chunk: int = 0) -> np.random.Generator:
    """
    Returns the generator of one chunk of one experiment.

    Args:
        seed (int): Master seed (unsigned 64-bit).
        experiment (str): Name of the experiment or estimator.
        chunk (int): Index of the chunk.

    Returns:
        np.random.Generator: An independent PCG64 generator.
    """
    sequence = np.random.SeedSequence([int(seed), experiment_code(experiment), int(chunk)])
    return np.random.default_rng(sequence)


def chunk_sizes(n_items: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    """
    Splits `n_items` into consecutive chunks of at most `chunk_size`.
    """
    if n_items <= 0:
        return []
    full, rest = divmod(int(n_items), int(chunk_size))
    sizes = [int(chunk_size)] * full
    if rest:
        sizes.append(rest)
    return sizes
