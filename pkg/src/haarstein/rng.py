"""Reproducible random streams keyed by ``(master_seed, stream_index)``.

Every stream is a Philox (counter-based) generator whose key is derived from
a :class:`numpy.random.SeedSequence`, so the same key gives the same numbers
on any platform and regardless of how work is split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

__all__ = ["RngStream", "chunk_sizes", "map_chunks", "DEFAULT_CHUNK"]

T = TypeVar("T")

#: Draws per substream in batch drivers.  Fixed so that results never depend
#: on the number of workers.
DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class RngStream:
    """A keyed random stream.

    Parameters
    ----------
    master_seed : int
        64-bit seed shared by a whole campaign.
    stream_index : int
        Nonnegative index of the stream within the campaign.
    path : tuple of int
        Further sub-keys added by :meth:`substream`.
    """

    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.stream_index < 0 or any(p < 0 for p in self.path):
            raise ValueError("stream indices must be nonnegative")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(self.stream_index),) + tuple(self.path)
        )

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def substream(self, *keys: int) -> "RngStream":
        """Independent child stream, e.g. one per chunk or per role."""
        return RngStream(self.master_seed, self.stream_index, self.path + tuple(int(k) for k in keys))


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


def chunk_sizes(count: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if count < 1:
        raise ValueError("count must be >= 1")
    full, rest = divmod(count, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[int, int, RngStream], T],
    count: int,
    rng,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> list[T]:
    """Run ``fn(chunk_id, size, substream)`` over fixed-size chunks.

    Chunk ``c`` always consumes ``rng.substream(c)``, and results come back
    in chunk order, so the output is the same for any ``workers``.
    """
    stream = _as_stream(rng)
    sizes = chunk_sizes(count, chunk)
    jobs = [(c, s, stream.substream(c)) for c, s in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(list(parts), axis=0)
