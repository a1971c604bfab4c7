import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slsm.core import Entry
from slsm.skiplist import MAX_LEVEL, SkiplistRun, random_level


class _FixedBits:
    """Stand-in RNG that replays scripted 16-bit words."""

    def __init__(self, words):
        self.words = list(words)

    def getrandbits(self, n):
        assert n == MAX_LEVEL
        return self.words.pop(0)


def test_random_level_first_set_bit():
    assert random_level(_FixedBits([0b1])) == 1
    assert random_level(_FixedBits([0b0001_0000])) == 5
    assert random_level(_FixedBits([0b1000_0000_0000_0000])) == 16
    assert random_level(_FixedBits([0])) == 16  # all zero clamps to MAXLEVEL


def test_random_level_distribution_small():
    rng = random.Random(42)
    n = 10**5
    counts = [0] * (MAX_LEVEL + 1)
    for _ in range(n):
        counts[random_level(rng)] += 1
    assert counts[1] / n == pytest.approx(0.5, abs=0.005)
    for level in range(1, 9):
        p = 2.0 ** -level
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[level] - n * p) < 4 * sigma


def _fresh(seed=1):
    return SkiplistRun(random.Random(seed))


def test_insert_into_empty():
    run = _fresh()
    assert run.insert(5, 7) is True
    assert run.count == 1
    assert (run.min_key, run.max_key) == (5, 5)
    assert run.lookup(5) == Entry(5, 7, False)


def test_insert_updates_in_place():
    run = _fresh()
    assert run.insert(5, 7) is True
    assert run.insert(5, 9) is False
    assert run.count == 1
    assert run.lookup(5) == Entry(5, 9, False)
    # tombstone flag overwrites in place too
    assert run.insert(5, 0, tombstone=True) is False
    assert run.lookup(5) == Entry(5, 0, True)


def test_lookup_on_empty_and_absent():
    run = _fresh()
    assert run.lookup(3) is None
    run.insert(3, 30)
    assert run.lookup(3) == Entry(3, 30, False)
    assert run.lookup(4) is None


def test_range_scan_half_open():
    run = _fresh()
    for key in (1, 2, 3):
        run.insert(key, key * 10)
    assert [e.key for e in run.range_scan(1, 3)] == [1, 2]
    assert run.range_scan(5, 5) == []
    with pytest.raises(ValueError):
        run.range_scan(3, 1)


def test_drain_sorted_matches_inserts():
    run = _fresh()
    for key, value in ((3, 30), (1, 10), (2, 20)):
        run.insert(key, value)
    assert list(run.drain_sorted()) == [Entry(1, 10, False),
                                        Entry(2, 20, False),
                                        Entry(3, 30, False)]
    assert _fresh().count == 0 and list(_fresh().drain_sorted()) == []


def test_thousand_random_inserts_match_sorted_set_oracle():
    rng = random.Random(7)
    run = _fresh()
    model = {}
    for _ in range(1000):
        key = rng.randint(0, 500)
        value = rng.randint(-10**6, 10**6)
        was_new = run.insert(key, value)
        assert was_new == (key not in model)
        model[key] = value
    assert [e.key for e in run.drain_sorted()] == sorted(model)
    assert run.count == len(model)
    assert (run.min_key, run.max_key) == (min(model), max(model))
    for probe in range(-10, 510):
        entry = run.lookup(probe)
        if probe in model:
            assert entry == Entry(probe, model[probe], False)
        else:
            assert entry is None
    for _ in range(100):
        lo = rng.randint(-10, 510)
        hi = rng.randint(lo, 510)
        expect = [(k, model[k]) for k in sorted(model) if lo <= k < hi]
        assert [(e.key, e.value) for e in run.range_scan(lo, hi)] == expect


def test_drain_equals_full_range_scan():
    rng = random.Random(11)
    run = _fresh()
    for _ in range(500):
        run.insert(rng.randint(-1000, 1000), rng.randint(0, 9))
    assert list(run.drain_sorted()) == run.range_scan(run.min_key,
                                                      run.max_key + 1)


def test_level_chains_are_subsequences():
    rng = random.Random(3)
    run = _fresh()
    for _ in range(2000):
        run.insert(rng.randint(0, 10**6), 0)
    chains = []
    for level in range(MAX_LEVEL):
        node = run._head.links[level] if level < len(run._head.links) else None
        chain = []
        while node is not None:
            chain.append(node.key)
            node = node.links[level] if level < len(node.links) else None
        chains.append(chain)
    assert chains[0] == sorted(set(chains[0]))          # strictly increasing
    for level in range(1, MAX_LEVEL):
        lower = set(chains[level - 1])
        assert all(key in lower for key in chains[level])


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 5)), max_size=200))
@settings(max_examples=60, deadline=None)
def test_oracle_equivalence_property(ops):
    run = _fresh()
    model = {}
    for key, value in ops:
        run.insert(key, value)
        model[key] = value
    assert [(e.key, e.value) for e in run.drain_sorted()] == \
        sorted(model.items())
    assert run.count == len(model)
