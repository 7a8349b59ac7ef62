"""
This module runs chunked Monte Carlo work on a thread pool.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

import numpy as np

from .streams import CHUNK_SIZE, chunk_sizes, make_stream


T = TypeVar("T")


def map_chunks(
    func: Callable[[int, np.random.Generator], T],
    n_items: int,
    seed: int,
    experiment: str,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> List[T]:
    """
    Applies `func(size, rng)` to every chunk and returns the results in chunk order.

    Args:
        func (Callable): Worker called with the chunk size and its generator.
        n_items (int): Total number of items (paths, draws, replications).
        seed (int): Master seed.
        experiment (str): Experiment name used in the stream key.
        threads (int): Number of worker threads.
        chunk_size (int): Items per chunk.

    Returns:
        List: One result per chunk, ordered by chunk index.
    """
    sizes = chunk_sizes(n_items, chunk_size)
    tasks = [(size, make_stream(seed, experiment, index)) for index, size in enumerate(sizes)]
    if threads <= 1 or len(tasks) <= 1:
        return [func(size, rng) for size, rng in tasks]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(lambda task: func(task[0], task[1]), tasks))
