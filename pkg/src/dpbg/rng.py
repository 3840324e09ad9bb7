"""Splittable random streams for reproducible (optionally parallel) sampling."""

from __future__ import annotations

import numpy as np


class RngStream:
    """A position in a tree of statistically independent random streams.

    A stream is identified by a 64-bit ``seed`` plus a ``path`` of child
    indices. The draw sequence is a pure function of ``(seed, path)``:
    reconstructing a stream from the same pair always replays the same
    values, independent of thread count or of what sibling streams did.
    Child streams obtained through :meth:`child` are independent of the
    parent and of each other.
    """

    __slots__ = ("seed", "path", "gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()) -> None:
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.path = tuple(int(i) for i in path)
        if any(i < 0 for i in self.path):
            raise ValueError(f"path entries must be nonnegative, got {self.path}")
        ss = np.random.SeedSequence(seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *indices: int) -> "RngStream":
        """Return the independent stream at ``path + indices``.

        Creating a child does not advance this stream's state.
        """
        return RngStream(self.seed, self.path + tuple(indices))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"
