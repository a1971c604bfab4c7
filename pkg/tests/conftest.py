"""Shared oracles: tiny independent models the engine must agree with."""

from __future__ import annotations

import random

import pytest

from slsm.core import Entry


class ReferenceMap:
    """Dict-backed model of put/delete/get/range, newest write wins."""

    def __init__(self):
        self.data: dict[int, int] = {}

    def put(self, key: int, value: int) -> None:
        self.data[key] = value

    def delete(self, key: int) -> None:
        self.data.pop(key, None)

    def get(self, key: int):
        return self.data.get(key)

    def range(self, lo: int, hi: int) -> list[tuple[int, int]]:
        return sorted((k, v) for k, v in self.data.items() if lo <= k < hi)


def brute_force_merge(streams: list[list], new_deepest: bool) -> list[tuple]:
    """Independent model of the k-way merge: concatenate, sort by
    (key, stream index), keep the last (newest) entry per key, drop
    tombstones only for a new deepest level."""
    tagged = []
    for idx, stream in enumerate(streams):
        for entry in stream:
            tagged.append((entry[0], idx, entry[1], entry[2]))
    tagged.sort(key=lambda t: (t[0], t[1]))
    out = []
    for key, _, value, tomb in tagged:
        if out and out[-1][0] == key:
            out[-1] = (key, value, tomb)
        else:
            out.append((key, value, tomb))
    if new_deepest:
        out = [e for e in out if not e[2]]
    return out


def random_sorted_streams(rng: random.Random, max_streams: int = 8,
                          max_total: int = 400, dup_rate: float = 0.2,
                          tomb_rate: float = 0.1) -> list[list[Entry]]:
    """Sorted distinct-key streams with controlled cross-stream duplicate
    and tombstone rates."""
    n_streams = rng.randint(1, max_streams)
    total = rng.randint(0, max_total)
    universe_size = max(1, int(total * (1.0 - dup_rate)) + 1)
    universe = rng.sample(range(-max_total * 4, max_total * 4),
                          min(universe_size, max_total * 8))
    streams = []
    for _ in range(n_streams):
        size = rng.randint(0, max(1, total // n_streams))
        keys = sorted(rng.sample(universe, min(size, len(universe))))
        streams.append([
            Entry(k, 0, True) if rng.random() < tomb_rate
            else Entry(k, rng.randint(-10**6, 10**6), False)
            for k in keys
        ])
    return streams


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
