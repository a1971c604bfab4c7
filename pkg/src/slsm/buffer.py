"""The in-memory tier: R skiplist runs with one active run.

Each run is paired with a Bloom filter and min/max extrema.  Inserts go
only to the newest (active) run; when it fills, a fresh run is opened,
and when all R runs are full the oldest round(m*R) runs are handed off
as a flush batch for merging to disk level 1.  Handing off transfers
ownership: the buffer immediately keeps accepting puts into fresh runs
while the caller merges the sealed batch.
"""

from __future__ import annotations

from random import Random
from typing import Iterator, Optional

from .bloom import BloomFilter, hash_key
from .core import Entry, TuningParams
from .skiplist import SkiplistRun


class BufferRun:
    """A skiplist run plus its membership filter."""

    __slots__ = ("run", "filter")

    def __init__(self, rng: Random, params: TuningParams, use_bloom: bool):
        self.run = SkiplistRun(rng)
        self.filter = BloomFilter(params.run_size, params.epsilon) if use_bloom else None


class FlushBatch:
    """Sealed runs removed from the buffer, oldest first."""

    __slots__ = ("runs",)

    def __init__(self, runs: tuple[BufferRun, ...]):
        self.runs = runs

    @property
    def entry_count(self) -> int:
        return sum(br.run.count for br in self.runs)

    def streams(self) -> list[Iterator[Entry]]:
        """One sorted entry stream per run, oldest first."""
        return [br.run.drain_sorted() for br in self.runs]


class MemoryBuffer:
    """Write buffer of up to R runs; single writer, shared readers on
    sealed runs."""

    def __init__(self, params: TuningParams, rng: Random, use_bloom: bool = True):
        self._params = params
        self._rng = rng
        self._use_bloom = use_bloom
        # immutable tuple republished on every structural change so readers
        # can grab a consistent snapshot with one attribute read
        self._runs: tuple[BufferRun, ...] = (BufferRun(rng, params, use_bloom),)

    @property
    def runs(self) -> tuple[BufferRun, ...]:
        return self._runs

    @property
    def entry_count(self) -> int:
        return sum(br.run.count for br in self._runs)

    def put(self, entry: Entry, pre_seal=None) -> Optional[FlushBatch]:
        """Insert into the active run; returns a FlushBatch when all R runs
        were full and the oldest round(m*R) runs were evicted to make room.

        ``pre_seal``, when given, runs immediately before an eviction
        becomes visible to readers (the engine uses it to flip its
        merge-in-flight state first, so no read can fall between the two).
        """
        runs = self._runs
        active = runs[-1]
        batch: Optional[FlushBatch] = None
        if active.run.count >= self._params.run_size:
            # a full active run still accepts updates of keys it already
            # holds; only a new key forces rotation
            if active.run.lookup(entry.key) is None:
                if len(runs) >= self._params.r:
                    n = self._params.flush_runs
                    batch = FlushBatch(runs[:n])
                    runs = runs[n:]
                active = BufferRun(self._rng, self._params, self._use_bloom)
                runs = runs + (active,)
                if batch is not None and pre_seal is not None:
                    pre_seal()
                self._runs = runs
        active.run.insert(entry.key, entry.value, entry.tombstone)
        if active.filter is not None:
            active.filter.add(entry.key)
        return batch

    def get(self, key: int, hashed: Optional[tuple[int, int]] = None) -> Optional[Entry]:
        """Newest entry for ``key`` across runs (tombstones included)."""
        runs = self._runs
        for i in range(len(runs) - 1, -1, -1):
            br = runs[i]
            run = br.run
            if run.count == 0 or key < run.min_key or key > run.max_key:
                continue
            if br.filter is not None:
                if hashed is None:
                    hashed = hash_key(key)
                if not br.filter.may_contain_hashed(hashed[0], hashed[1]):
                    continue
            entry = run.lookup(key)
            if entry is not None:
                return entry
        return None

    def range_scan(self, lo: int, hi: int) -> list[list[Entry]]:
        """Per-run sorted entry lists intersecting [lo, hi), newest run
        first, tombstones included."""
        if lo > hi:
            raise ValueError("empty range: lo > hi")
        out: list[list[Entry]] = []
        runs = self._runs
        for i in range(len(runs) - 1, -1, -1):
            run = runs[i].run
            if run.count == 0 or run.max_key < lo or run.min_key >= hi:
                continue
            seq = run.range_scan(lo, hi)
            if seq:
                out.append(seq)
        return out

    def drain_all(self) -> Optional[FlushBatch]:
        """Seal every non-empty run (oldest first) and reset the buffer;
        used when flushing the memory tier to disk on demand."""
        sealed = tuple(br for br in self._runs if br.run.count > 0)
        self._runs = (BufferRun(self._rng, self._params, self._use_bloom),)
        if not sealed:
            return None
        return FlushBatch(sealed)
