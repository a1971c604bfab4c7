"""slsm: an embeddable skiplist-based LSM tree storage engine.

A memory buffer of skiplist runs absorbs writes; full runs flush through
a heap-based k-way merge into tiered, immutable disk runs indexed by
Bloom filters, min/max keys and fence pointers.  Ships with a workload
CLI (``slsm``) and a benchmark harness.
"""

from .bloom import BloomFilter, hash_key, murmur3_x64_128
from .buffer import FlushBatch, MemoryBuffer
from .core import Entry, TuningParams, params_from_env, tombstone, validate
from .diskrun import DiskRun, RunFormatError
from .engine import CostEstimate, Engine, MergeError, RangeDedupeTable, cost_model
from .levels import LevelStore, MergeStats, UnsortedRunError, heap_merge
from .skiplist import MAX_LEVEL, SkiplistRun, random_level
from .workload import WorkloadSpec, generate_ops, generate_script, run_script

__version__ = "0.1.0"

__all__ = [
    "BloomFilter", "CostEstimate", "DiskRun", "Engine", "Entry", "FlushBatch",
    "LevelStore", "MAX_LEVEL", "MemoryBuffer", "MergeError", "MergeStats",
    "RangeDedupeTable", "RunFormatError", "SkiplistRun", "TuningParams",
    "UnsortedRunError", "WorkloadSpec", "cost_model", "generate_ops",
    "generate_script", "hash_key", "heap_merge", "murmur3_x64_128",
    "params_from_env", "random_level", "run_script", "tombstone", "validate",
]
