"""
This module contains utilities for conversion, logging, random streams and parallel work.

Classes:
    Converter: A class for converting tables and reports to files.
    TailExtrapolation: A fitted extension of a tabulated tail.
    create_logger: A function for creating a configured logger.
    make_stream: A function deriving a reproducible random generator.
    map_chunks: A function running chunked work on a thread pool.
"""

from .converter import Converter
from .logger import create_logger
from .streams import CHUNK_SIZE, make_stream, chunk_sizes
from .parallel import map_chunks
from .tail import TailExtrapolation

__all__ = [
    "Converter",
    "create_logger",
    "CHUNK_SIZE",
    "make_stream",
    "chunk_sizes",
    "map_chunks",
    "TailExtrapolation",
]
