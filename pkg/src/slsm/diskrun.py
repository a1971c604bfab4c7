"""Immutable on-disk sorted runs with fence pointers and Bloom filters.

File format (little-endian, no padding):

    header:  magic "SLSM" | version u16 = 1 | keyWidth u8 = 4
             | valueWidth u8 = 4 | entryCount u64          (16 bytes)
    records: entryCount * (key i32 | value i32 | flags u8)  (9 bytes each)

flags bit 0 marks a tombstone; tombstone records carry value 0 so equal
deletions are byte-identical.  Entry j starts at byte 16 + 9*j, which is
what makes fence-bounded binary search on the raw file possible.

Fence pointers and the Bloom filter are rebuilt from the file on open
rather than persisted, keeping a single self-validating file per run.
"""

from __future__ import annotations

import os
import struct
from array import array
from bisect import bisect_right
from typing import Iterable, Iterator, Optional

import numpy as np

from .bloom import BloomFilter, hash_key
from .core import Entry, TuningParams

MAGIC = b"SLSM"
VERSION = 1
KEY_WIDTH = 4
VALUE_WIDTH = 4

_HEADER = struct.Struct("<4sHBBQ")
_RECORD = struct.Struct("<iiB")
HEADER_SIZE = _HEADER.size          # 16
RECORD_SIZE = _RECORD.size          # 9

TOMBSTONE_FLAG = 0x01

_WRITE_CHUNK = 4096                 # records buffered per write
_SCAN_CHUNK = 8192                  # records per read while streaming

_RECORD_DTYPE = np.dtype([("key", "<i4"), ("value", "<i4"), ("flags", "u1")])


class RunFormatError(ValueError):
    """Raised when a run file fails validation."""


class DiskRun:
    """One immutable sorted run backed by a file.

    Use :meth:`build` or :meth:`open`; the constructor wires an already
    validated state.  Reads are positional (pread) so any number of
    threads may share a run.
    """

    __slots__ = ("path", "entry_count", "min_key", "max_key", "fences",
                 "filter", "mu", "read_count", "_fd")

    def __init__(self, path: str, fd: int, entry_count: int, keys: np.ndarray,
                 mu: int, epsilon: float, use_bloom: bool):
        self.path = path
        self._fd = fd
        self.entry_count = entry_count
        self.mu = mu
        self.min_key = int(keys[0])
        self.max_key = int(keys[-1])
        self.fences: list[int] = keys[::mu].tolist()
        if use_bloom:
            filt = BloomFilter(entry_count, epsilon)
            filt.add_batch(keys)
            self.filter: Optional[BloomFilter] = filt
        else:
            self.filter = None
        self.read_count = 0         # records fetched from disk (diagnostic)

    # -- construction --------------------------------------------------

    @classmethod
    def build(cls, entries: Iterable[Entry], params: TuningParams, path: str,
              use_bloom: bool = True) -> "DiskRun":
        """Write a strictly key-ascending entry sequence to ``path``.

        Rejects empty or unsorted input; a rejected build removes the
        partial file.
        """
        keys = array("i")
        pack = _RECORD.pack
        prev = None
        try:
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(MAGIC, VERSION, KEY_WIDTH, VALUE_WIDTH, 0))
                chunk: list[bytes] = []
                for key, value, tomb in entries:
                    if prev is not None and key <= prev:
                        raise ValueError(
                            f"unsorted input: key {key} after {prev}")
                    prev = key
                    keys.append(key)
                    chunk.append(pack(key, 0 if tomb else value,
                                      TOMBSTONE_FLAG if tomb else 0))
                    if len(chunk) >= _WRITE_CHUNK:
                        fh.write(b"".join(chunk))
                        chunk.clear()
                if chunk:
                    fh.write(b"".join(chunk))
                if not keys:
                    raise ValueError("cannot build an empty run")
                fh.seek(0)
                fh.write(_HEADER.pack(MAGIC, VERSION, KEY_WIDTH, VALUE_WIDTH,
                                      len(keys)))
        except Exception:
            if os.path.exists(path):
                os.unlink(path)
            raise
        key_arr = np.frombuffer(keys, dtype=np.int32)
        fd = os.open(path, os.O_RDONLY)
        return cls(path, fd, len(keys), key_arr, params.mu, params.epsilon,
                   use_bloom)

    @classmethod
    def open(cls, path: str, params: TuningParams,
             use_bloom: bool = True) -> "DiskRun":
        """Reopen an existing run file, rebuilding fences, filter and
        extrema in one sequential scan."""
        fd = os.open(path, os.O_RDONLY)
        try:
            header = os.pread(fd, HEADER_SIZE, 0)
            if len(header) < HEADER_SIZE:
                raise RunFormatError(f"{path}: truncated header")
            magic, version, kw, vw, count = _HEADER.unpack(header)
            if magic != MAGIC:
                raise RunFormatError(f"{path}: bad magic {magic!r}")
            if version != VERSION:
                raise RunFormatError(f"{path}: unsupported version {version}")
            if kw != KEY_WIDTH or vw != VALUE_WIDTH:
                raise RunFormatError(
                    f"{path}: unsupported widths key={kw} value={vw}")
            if count < 1:
                raise RunFormatError(f"{path}: empty run")
            body = os.pread(fd, count * RECORD_SIZE, HEADER_SIZE)
            if len(body) < count * RECORD_SIZE:
                raise RunFormatError(f"{path}: truncated file")
            records = np.frombuffer(body, dtype=_RECORD_DTYPE, count=count)
            keys = np.ascontiguousarray(records["key"])
            if count > 1 and not bool(np.all(keys[1:] > keys[:-1])):
                raise RunFormatError(f"{path}: key order violation")
        except Exception:
            os.close(fd)
            raise
        return cls(path, fd, int(count), keys, params.mu, params.epsilon,
                   use_bloom)

    # -- point lookups ---------------------------------------------------

    def _record(self, index: int) -> tuple[int, int, int]:
        self.read_count += 1
        buf = os.pread(self._fd, RECORD_SIZE, HEADER_SIZE + RECORD_SIZE * index)
        return _RECORD.unpack(buf)

    def get(self, key: int,
            hashed: Optional[tuple[int, int]] = None) -> Optional[Entry]:
        """Entry for ``key`` or None; min/max and Bloom gates run before any
        file access, then binary search within one fence window."""
        if key < self.min_key or key > self.max_key:
            return None
        if self.filter is not None:
            if hashed is None:
                hashed = hash_key(key)
            if not self.filter.may_contain_hashed(hashed[0], hashed[1]):
                return None
        window = bisect_right(self.fences, key) - 1
        lo = window * self.mu
        hi = min(lo + self.mu, self.entry_count)
        record = self._record
        while lo < hi:
            mid = (lo + hi) // 2
            k, value, flags = record(mid)
            if k < key:
                lo = mid + 1
            elif k > key:
                hi = mid
            else:
                return Entry(k, value, bool(flags & TOMBSTONE_FLAG))
        return None

    def _lower_bound(self, key: int) -> int:
        """First entry index whose key is >= ``key``."""
        if key <= self.min_key:
            return 0
        if key > self.max_key:
            return self.entry_count
        window = bisect_right(self.fences, key) - 1
        lo = window * self.mu
        hi = min(lo + self.mu, self.entry_count)
        record = self._record
        while lo < hi:
            mid = (lo + hi) // 2
            if record(mid)[0] < key:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def range_bounds(self, lo: int, hi: int) -> tuple[int, int]:
        """Entry index interval [iLo, iHi) covering keys in [lo, hi)."""
        if lo > hi:
            raise ValueError("empty range: lo > hi")
        return self._lower_bound(lo), self._lower_bound(hi)

    # -- bulk reads ------------------------------------------------------

    def read_entries(self, start: int, stop: int) -> list[Entry]:
        """Entries [start, stop) via one contiguous read."""
        if not (0 <= start <= stop <= self.entry_count):
            raise IndexError(f"bad slice [{start}, {stop})")
        n = stop - start
        if n == 0:
            return []
        buf = os.pread(self._fd, n * RECORD_SIZE,
                       HEADER_SIZE + RECORD_SIZE * start)
        self.read_count += n
        return [Entry(k, v, bool(f & TOMBSTONE_FLAG))
                for k, v, f in _RECORD.iter_unpack(buf)]

    def entries(self, start: int = 0,
                stop: Optional[int] = None) -> Iterator[tuple[int, int, int]]:
        """Stream (key, value, flags) tuples for [start, stop); feeds merges."""
        stop = self.entry_count if stop is None else stop
        offset = start
        while offset < stop:
            n = min(_SCAN_CHUNK, stop - offset)
            buf = os.pread(self._fd, n * RECORD_SIZE,
                           HEADER_SIZE + RECORD_SIZE * offset)
            yield from _RECORD.iter_unpack(buf)
            offset += n

    # -- lifecycle ---------------------------------------------------------

    def delete(self) -> None:
        """Unlink the backing file.  The open descriptor keeps in-flight
        readers working; the data goes away when the run is closed."""
        try:
            os.unlink(self.path)
        except FileNotFoundError:
            pass

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1

    def __del__(self):
        try:
            self.close()
        except OSError:
            pass

    def __len__(self) -> int:
        return self.entry_count

    def __repr__(self) -> str:
        return (f"DiskRun({os.path.basename(self.path)}, n={self.entry_count}, "
                f"keys=[{self.min_key}, {self.max_key}])")
