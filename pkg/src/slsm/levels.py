"""The tiered disk store: levels of runs, k-way heap merge, cascades.

Merging pulls one head per source stream through a min-heap keyed by
(key, stream index), so auxiliary space stays bounded by the stream
count while newest-wins deduplication falls out of pop order: among
equal keys the highest stream index (newest run) is popped last and
survives.  A merge that lands on a freshly created deepest level drops
tombstones entirely, since there is nothing below left to supersede.

A full level cascades recursively: its oldest round(m*D) runs merge one
level down (creating that level if needed) before the incoming batch is
placed.  After every cascade the manifest -- one "level,index,filename,
entryCount" line per live run -- is rewritten atomically so the store
can be reopened.
"""

from __future__ import annotations

import heapq
import os
import re
from itertools import chain
from typing import Iterable, Iterator, Optional

from .core import TuningParams
from .diskrun import DiskRun, RunFormatError

MANIFEST_NAME = "manifest.txt"

_RUN_NAME = re.compile(r"level(\d+)_run(\d+)\.slsm$")


class UnsortedRunError(RuntimeError):
    """A source stream produced keys out of order mid-merge."""

    def __init__(self, run_index: int, key: int, prev: int):
        super().__init__(
            f"run {run_index} unsorted: key {key} after {prev}")
        self.run_index = run_index


class MergeStats:
    """Counters sampled during one heap merge (used by verification)."""

    __slots__ = ("max_heap_size", "entries_in", "entries_out")

    def __init__(self):
        self.max_heap_size = 0
        self.entries_in = 0
        self.entries_out = 0


def heap_merge(streams: list[Iterable], new_deepest: bool = False,
               stats: Optional[MergeStats] = None) -> Iterator[tuple]:
    """Merge sorted (key, value, tombstone) streams, oldest first.

    Yields strictly key-ascending entries; for duplicate keys the entry
    from the highest-indexed (newest) stream wins.  When ``new_deepest``
    is set, tombstones are omitted from the output.
    """
    iters = [iter(s) for s in streams]
    heap = []
    for idx, it in enumerate(iters):
        head = next(it, None)
        if head is not None:
            heap.append((head[0], idx, head[1], head[2]))
    heapq.heapify(heap)
    if stats is not None:
        stats.max_heap_size = len(heap)
    push = heapq.heappush
    pop = heapq.heappop
    last_key = last_value = last_tomb = None
    have = False
    while heap:
        key, idx, value, tomb = pop(heap)
        if stats is not None:
            stats.entries_in += 1
        head = next(iters[idx], None)
        if head is not None:
            if head[0] <= key:
                raise UnsortedRunError(idx, head[0], key)
            push(heap, (head[0], idx, head[1], head[2]))
            if stats is not None and len(heap) > stats.max_heap_size:
                stats.max_heap_size = len(heap)
        if have and key == last_key:
            # same key from a newer run supersedes what we held
            last_value = value
            last_tomb = tomb
        else:
            if have and not (new_deepest and last_tomb):
                if stats is not None:
                    stats.entries_out += 1
                yield (last_key, last_value, last_tomb)
            last_key, last_value, last_tomb = key, value, tomb
            have = True
    if have and not (new_deepest and last_tomb):
        if stats is not None:
            stats.entries_out += 1
        yield (last_key, last_value, last_tomb)


class _Level:
    __slots__ = ("runs", "next_run_id")

    def __init__(self):
        self.runs: list[DiskRun] = []
        self.next_run_id = 1


class LevelStore:
    """L levels of up to D immutable runs each, level 1 shallowest.

    Mutations happen on one thread at a time (the engine's merge thread);
    readers work off :attr:`snapshot`, an immutable tuple-of-tuples that
    is republished atomically after each cascade.
    """

    def __init__(self, data_dir: str, params: TuningParams,
                 use_bloom: bool = True):
        self._dir = data_dir
        self._params = params
        self._use_bloom = use_bloom
        self._levels: list[_Level] = []
        self.snapshot: tuple[tuple[DiskRun, ...], ...] = ()
        os.makedirs(data_dir, exist_ok=True)
        if os.path.exists(self._manifest_path()):
            self._load_manifest()
            self.snapshot = tuple(tuple(lvl.runs) for lvl in self._levels)

    # -- queries ----------------------------------------------------------

    @property
    def level_count(self) -> int:
        return len(self.snapshot)

    @property
    def run_counts(self) -> list[int]:
        return [len(runs) for runs in self.snapshot]

    @property
    def entry_count(self) -> int:
        return sum(r.entry_count for runs in self.snapshot for r in runs)

    def get(self, key: int, hashed=None):
        """Newest entry for ``key``: levels shallow to deep, runs newest to
        oldest within a level; every run gates on min/max then Bloom."""
        for runs in self.snapshot:
            for i in range(len(runs) - 1, -1, -1):
                entry = runs[i].get(key, hashed)
                if entry is not None:
                    return entry
        return None

    def range_scan(self, lo: int, hi: int) -> list[list]:
        """One sorted entry list per run intersecting [lo, hi), newest run
        first within a level, shallowest level first."""
        if lo > hi:
            raise ValueError("empty range: lo > hi")
        out = []
        for runs in self.snapshot:
            for i in range(len(runs) - 1, -1, -1):
                run = runs[i]
                if run.max_key < lo or run.min_key >= hi:
                    continue
                i_lo, i_hi = run.range_bounds(lo, hi)
                if i_lo < i_hi:
                    out.append(run.read_entries(i_lo, i_hi))
        return out

    # -- merging ------------------------------------------------------------

    def flush_batch(self, streams: list[Iterable]) -> None:
        """Merge a buffer flush (sorted streams, oldest first) into level 1,
        cascading as needed, then republish snapshot and manifest."""
        self._do_merge(streams, 1)
        self._publish()

    def _do_merge(self, streams: list[Iterable], level_no: int) -> None:
        created = False
        if level_no > len(self._levels):
            self._levels.append(_Level())
            created = True
        level = self._levels[level_no - 1]
        if not created and len(level.runs) >= self._params.d:
            width = self._params.merge_runs
            displaced = level.runs[:width]
            self._do_merge([run.entries() for run in displaced], level_no + 1)
            del level.runs[:width]
            for run in displaced:
                run.delete()
        new_deepest = created and level_no == len(self._levels)
        merged = heap_merge(streams, new_deepest)
        first = next(merged, None)
        if first is None:
            # every entry was a tombstone dropped at the new deepest level
            return
        run_id = level.next_run_id
        level.next_run_id += 1
        path = os.path.join(self._dir, f"level{level_no}_run{run_id}.slsm")
        run = DiskRun.build(chain((first,), merged), self._params, path,
                            self._use_bloom)
        level.runs.append(run)

    def _publish(self) -> None:
        while self._levels and not self._levels[-1].runs:
            self._levels.pop()
        self.snapshot = tuple(tuple(lvl.runs) for lvl in self._levels)
        self._write_manifest()

    # -- manifest -------------------------------------------------------------

    def _manifest_path(self) -> str:
        return os.path.join(self._dir, MANIFEST_NAME)

    def _write_manifest(self) -> None:
        lines = []
        for level_no, level in enumerate(self._levels, start=1):
            for index, run in enumerate(level.runs, start=1):
                name = os.path.basename(run.path)
                lines.append(f"{level_no},{index},{name},{run.entry_count}\n")
        tmp = self._manifest_path() + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
        os.replace(tmp, self._manifest_path())

    def _load_manifest(self) -> None:
        rows: list[tuple[int, int, str, int]] = []
        with open(self._manifest_path(), encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise RunFormatError(
                        f"manifest line {ln}: expected 4 fields, got {line!r}")
                level_no, index, name, count = (int(parts[0]), int(parts[1]),
                                                parts[2], int(parts[3]))
                rows.append((level_no, index, name, count))
        if not rows:
            return
        depth = max(row[0] for row in rows)
        self._levels = [_Level() for _ in range(depth)]
        for level_no, index, name, count in sorted(rows):
            run = DiskRun.open(os.path.join(self._dir, name), self._params,
                               self._use_bloom)
            if run.entry_count != count:
                run.close()
                raise RunFormatError(
                    f"{name}: manifest says {count} entries, file has "
                    f"{run.entry_count}")
            level = self._levels[level_no - 1]
            level.runs.append(run)
            match = _RUN_NAME.search(name)
            if match:
                level.next_run_id = max(level.next_run_id,
                                        int(match.group(2)) + 1)

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        for level in self._levels:
            for run in level.runs:
                run.close()

    def run_files(self) -> list[str]:
        return [run.path for runs in self.snapshot for run in runs]
