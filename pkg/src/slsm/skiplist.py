"""One memory-buffer run: an ordered skiplist with O(1) level generation.

Node levels are geometric with p = 1/2, drawn by generating a 16-bit
random word and taking the position of its lowest set bit (an all-zero
word maps to the top level).  Each node carries a vertical array of
forward links, so descending a level is an index step instead of a
pointer chase.
"""

from __future__ import annotations

from random import Random
from typing import Iterator, Optional

from .core import Entry

MAX_LEVEL = 16


def random_level(rng: Random) -> int:
    """Level in [1, MAX_LEVEL]: position of the first set bit in a random
    16-bit word, counting from 1; 16 when the word is zero.

    P(level = n) = 2**-n for n <= 15, P(16) = 2**-15.
    """
    word = rng.getrandbits(MAX_LEVEL)
    if word == 0:
        return MAX_LEVEL
    return (word & -word).bit_length()


class _Node:
    __slots__ = ("key", "value", "tombstone", "links")

    def __init__(self, key, value, tombstone, level: int):
        self.key = key
        self.value = value
        self.tombstone = tombstone
        self.links: list[Optional[_Node]] = [None] * level


class SkiplistRun:
    """Single-writer sorted run of distinct keys.

    Inserting an existing key overwrites its value and tombstone flag in
    place; the node keeps its level and ``count`` is unchanged.  Readers
    may search a sealed run concurrently; the writer never overlaps with
    readers on the same run except under the engine's documented
    completed-before-read contract.
    """

    __slots__ = ("count", "min_key", "max_key", "_head", "_level", "_rng")

    def __init__(self, rng: Random):
        self._head = _Node(None, None, False, MAX_LEVEL)
        self._level = 1
        self._rng = rng
        self.count = 0
        self.min_key: Optional[int] = None
        self.max_key: Optional[int] = None

    def insert(self, key: int, value: int, tombstone: bool = False) -> bool:
        """Insert or update; returns True iff the key was absent."""
        node = self._head
        update = [node] * MAX_LEVEL
        for lvl in range(self._level - 1, -1, -1):
            nxt = node.links[lvl]
            while nxt is not None and nxt.key < key:
                node = nxt
                nxt = node.links[lvl]
            update[lvl] = node
        nxt = node.links[0]
        if nxt is not None and nxt.key == key:
            nxt.value = value
            nxt.tombstone = tombstone
            return False
        level = random_level(self._rng)
        if level > self._level:
            self._level = level
        new = _Node(key, value, tombstone, level)
        links = new.links
        for lvl in range(level):
            pred = update[lvl]
            links[lvl] = pred.links[lvl]
        # splice only after the new node's own links are complete, so a
        # concurrent reader never follows a half-built column
        for lvl in range(level):
            update[lvl].links[lvl] = new
        self.count += 1
        if self.min_key is None or key < self.min_key:
            self.min_key = key
        if self.max_key is None or key > self.max_key:
            self.max_key = key
        return True

    def lookup(self, key: int) -> Optional[Entry]:
        """Stored entry for ``key`` (tombstones included) or None."""
        node = self._head
        for lvl in range(self._level - 1, -1, -1):
            nxt = node.links[lvl]
            while nxt is not None and nxt.key < key:
                node = nxt
                nxt = node.links[lvl]
        node = node.links[0]
        if node is not None and node.key == key:
            return Entry(key, node.value, node.tombstone)
        return None

    def range_scan(self, lo: int, hi: int) -> list[Entry]:
        """Entries with lo <= key < hi in increasing key order, tombstones
        included."""
        if lo > hi:
            raise ValueError("empty range: lo > hi")
        node = self._head
        for lvl in range(self._level - 1, -1, -1):
            nxt = node.links[lvl]
            while nxt is not None and nxt.key < lo:
                node = nxt
                nxt = node.links[lvl]
        node = node.links[0]
        out: list[Entry] = []
        while node is not None and node.key < hi:
            out.append(Entry(node.key, node.value, node.tombstone))
            node = node.links[0]
        return out

    def drain_sorted(self) -> Iterator[Entry]:
        """All entries in increasing key order (read-only walk)."""
        node = self._head.links[0]
        while node is not None:
            yield Entry(node.key, node.value, node.tombstone)
            node = node.links[0]

    def __len__(self) -> int:
        return self.count
