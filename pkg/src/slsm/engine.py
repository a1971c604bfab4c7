"""Public engine facade: put/get/delete/range over buffer plus levels.

Writes land in the memory buffer; when the buffer rotates out a flush
batch, a dedicated merge thread takes ownership of the sealed runs and
merges them to disk while the writer keeps going.  At most one merge is
in flight; a reader that misses in memory waits for any in-flight merge
before touching the disk levels, so it always sees writes that completed
before it started.  Deletes are tombstone inserts; a tombstone found at
any tier makes the key absent, and the record itself is only dropped
when a merge starts a new deepest level.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from random import Random
from typing import Optional

from .bloom import hash_key
from .buffer import FlushBatch, MemoryBuffer
from .core import Entry, TuningParams, check_key, check_value, tombstone, validate
from .levels import LevelStore


class MergeError(RuntimeError):
    """A background merge failed; raised on the next operation."""


class RangeDedupeTable:
    """Open-addressing seen-set used while collecting range results.

    Linear probing over a power-of-two table of inlined keys; when more
    than half full it doubles and rehashes, so probe chains stay short
    and insertion is amortized O(1).  Alongside each key a marker records
    whether the key was emitted (first occurrence was a live value) or
    suppressed (first occurrence was a tombstone).
    """

    __slots__ = ("_keys", "_emitted", "_capacity", "_size")

    def __init__(self, capacity: int = 16):
        if capacity < 1 or capacity & (capacity - 1):
            raise ValueError("capacity must be a power of two")
        self._keys: list[Optional[int]] = [None] * capacity
        self._emitted = bytearray(capacity)
        self._capacity = capacity
        self._size = 0

    def insert(self, key: int, emitted: bool,
               h1: Optional[int] = None) -> bool:
        """Record ``key``; True iff it had not been seen before."""
        if h1 is None:
            h1 = hash_key(key)[0]
        mask = self._capacity - 1
        keys = self._keys
        idx = h1 & mask
        while keys[idx] is not None:
            if keys[idx] == key:
                return False
            idx = (idx + 1) & mask
        keys[idx] = key
        self._emitted[idx] = emitted
        self._size += 1
        if 2 * self._size > self._capacity:
            self._grow()
        return True

    def seen(self, key: int) -> bool:
        return self._find(key) >= 0

    def was_emitted(self, key: int) -> bool:
        idx = self._find(key)
        return idx >= 0 and bool(self._emitted[idx])

    def _find(self, key: int) -> int:
        mask = self._capacity - 1
        keys = self._keys
        idx = hash_key(key)[0] & mask
        while keys[idx] is not None:
            if keys[idx] == key:
                return idx
            idx = (idx + 1) & mask
        return -1

    def _grow(self) -> None:
        old_keys = self._keys
        old_emitted = self._emitted
        self._capacity *= 2
        self._keys = [None] * self._capacity
        self._emitted = bytearray(self._capacity)
        mask = self._capacity - 1
        keys = self._keys
        for slot, key in enumerate(old_keys):
            if key is None:
                continue
            idx = hash_key(key)[0] & mask
            while keys[idx] is not None:
                idx = (idx + 1) & mask
            keys[idx] = key
            self._emitted[idx] = old_emitted[slot]

    @property
    def size(self) -> int:
        return self._size

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def load_factor(self) -> float:
        return self._size / self._capacity


@dataclass(frozen=True)
class CostEstimate:
    """Closed-form expected operation costs, in abstract comparison units.

    These are relative numbers for comparing parameter choices, not
    seconds.  ``degenerate_geometry`` flags round(m*d) == 1, where levels
    grow linearly instead of geometrically and the log(d*m) factors
    collapse.
    """

    insert_cost: float
    lookup_cost: float
    levels: int
    degenerate_geometry: bool


def cost_model(params: TuningParams, n_elements: int) -> CostEstimate:
    """Expected insert and lookup cost for a store of ``n_elements``.

    insert:  log2(run_size) + (1 - log2(eps)) * L * log2(d*m)
    lookup:  (-eps*log2(eps)) * (r*log2(run_size) + d*L*log2(run_size)
             + d*L*log2(r) + d^2*L*log2(d*m))
    with L the number of disk levels needed for n_elements.
    """
    validate(params)
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    flush = params.flush_entries
    growth = params.merge_runs
    if growth <= 1:
        levels = max(1, math.ceil(n_elements / flush))
        degenerate = True
    else:
        levels = max(1, math.ceil(math.log(max(n_elements / flush, 1.0),
                                           growth)))
        degenerate = False
    log_eps = math.log2(params.epsilon)
    log_rn = math.log2(params.run_size)
    log_r = math.log2(params.r)
    log_dm = math.log2(params.d * params.m)
    insert = log_rn + (1.0 - log_eps) * levels * log_dm
    lookup = (-params.epsilon * log_eps) * (
        params.r * log_rn
        + params.d * levels * log_rn
        + params.d * levels * log_r
        + params.d * params.d * levels * log_dm)
    return CostEstimate(insert, lookup, levels, degenerate)


class Engine:
    """Skiplist-buffered, tiered-disk key-value engine.

    One writer thread issues put/delete; any number of reader threads may
    issue get/range concurrently (reads see all operations that completed
    before the read began).  Construction on an existing data directory
    reloads the manifest and all runs.
    """

    def __init__(self, data_dir: str, params: Optional[TuningParams] = None,
                 *, seed: int = 0, use_bloom: bool = True,
                 merge_threading: bool = True):
        self.params = validate(params if params is not None else TuningParams())
        self.data_dir = data_dir
        self._use_bloom = use_bloom
        self._merge_threading = merge_threading
        self._buffer = MemoryBuffer(self.params, Random(seed), use_bloom)
        self._store = LevelStore(data_dir, self.params, use_bloom)
        # serializes flush submission against range snapshots so a sealed
        # batch is never invisible to a reader mid-handoff
        self._flush_gate = threading.Lock()
        self._merging = False           # plain flag: cheap reader fast path
        self._merge_done = threading.Event()
        self._merge_done.set()
        self._merge_exc: Optional[BaseException] = None
        self._closed = False

    # -- write path -------------------------------------------------------

    def put(self, key: int, value: int) -> None:
        self._apply(Entry(check_key(key), check_value(value), False))

    def delete(self, key: int) -> None:
        """Tombstone insert: the key reads as absent from now on."""
        self._apply(tombstone(check_key(key)))

    def _apply(self, entry: Entry) -> None:
        self._check_open()
        with self._flush_gate:
            batch = self._buffer.put(entry, pre_seal=self._prepare_handoff)
            if batch is None:
                return
            if self._merge_threading:
                worker = threading.Thread(target=self._run_merge,
                                          args=(batch,), name="slsm-merge",
                                          daemon=True)
                worker.start()
            else:
                try:
                    self._store.flush_batch(batch.streams())
                finally:
                    self._merging = False
                    self._merge_done.set()

    def _prepare_handoff(self) -> None:
        """Runs just before a flush batch leaves the buffer: the previous
        merge must have fully published, and readers must start treating a
        merge as in flight before the batch becomes invisible."""
        self._merge_done.wait()
        self._raise_merge_failure()
        self._merging = True
        self._merge_done.clear()

    def _run_merge(self, batch: FlushBatch) -> None:
        try:
            self._store.flush_batch(batch.streams())
        except BaseException as exc:
            self._merge_exc = exc
        finally:
            self._merging = False
            self._merge_done.set()

    # -- read path -----------------------------------------------------------

    def get(self, key: int) -> Optional[int]:
        """Newest value for ``key``, or None if absent or deleted."""
        self._check_open()
        hashed = hash_key(key) if self._use_bloom else None
        entry = self._buffer.get(key, hashed)
        if entry is None:
            if self._merging:
                self._merge_done.wait()
                self._raise_merge_failure()
            entry = self._store.get(key, hashed)
        if entry is None or entry[2]:
            return None
        return entry[1]

    def range(self, lo: int, hi: int) -> list[tuple[int, int]]:
        """Live (key, value) pairs with lo <= key < hi, sorted by key.

        Walks run sequences newest to oldest; the first occurrence of a
        key decides whether it is emitted (live value) or suppressed
        (tombstone), tracked in an open-addressing dedupe table.
        """
        self._check_open()
        if lo > hi:
            raise ValueError("empty range: lo > hi")
        with self._flush_gate:
            self._merge_done.wait()
            self._raise_merge_failure()
            sequences = self._buffer.range_scan(lo, hi)
            snapshot = self._store.snapshot
        for runs in snapshot:
            for i in range(len(runs) - 1, -1, -1):
                run = runs[i]
                if run.max_key < lo or run.min_key >= hi:
                    continue
                i_lo, i_hi = run.range_bounds(lo, hi)
                if i_lo < i_hi:
                    sequences.append(run.read_entries(i_lo, i_hi))
        table = RangeDedupeTable()
        out: list[tuple[int, int]] = []
        for seq in sequences:
            for entry in seq:
                key = entry[0]
                tomb = entry[2]
                if table.insert(key, not tomb) and not tomb:
                    out.append((key, entry[1]))
        out.sort()
        return out

    # -- maintenance -----------------------------------------------------------

    def flush(self) -> None:
        """Merge everything buffered in memory down to the disk levels."""
        self._check_open()
        with self._flush_gate:
            self._prepare_handoff()
            try:
                batch = self._buffer.drain_all()
                if batch is not None:
                    self._store.flush_batch(batch.streams())
            finally:
                self._merging = False
                self._merge_done.set()

    def wait_for_merge(self) -> None:
        """Block until no merge is in flight (then surface any failure)."""
        self._merge_done.wait()
        self._raise_merge_failure()

    def close(self) -> None:
        """Flush the memory tier, persist the manifest, release files."""
        if self._closed:
            return
        self.flush()
        self._store.close()
        self._closed = True

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- introspection -----------------------------------------------------

    @property
    def buffer(self) -> MemoryBuffer:
        return self._buffer

    @property
    def store(self) -> LevelStore:
        return self._store

    @property
    def entry_count(self) -> int:
        """Stored entries across all tiers (tombstones included)."""
        return self._buffer.entry_count + self._store.entry_count

    def _check_open(self) -> None:
        if self._closed:
            raise RuntimeError("engine is closed")
        self._raise_merge_failure()

    def _raise_merge_failure(self) -> None:
        if self._merge_exc is not None:
            exc = self._merge_exc
            self._merge_exc = None
            raise MergeError("background merge failed") from exc
