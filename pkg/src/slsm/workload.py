"""Workload generation and the line-oriented script DSL.

Script commands, one per line:

    p <key> <value>   put
    g <key>           get      (prints the value, or an empty line)
    r <lo> <hi>       range    (prints "k:v k:v ...", or an empty line)
    d <key>           delete
    q                 quit

Generated workloads are byte-deterministic for a given spec: the op mix
is exact (round(ratio * ops) lookups), ordering comes from one seeded
shuffle, and keys are drawn uniformly or from a rounded normal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

from .core import KEY_MAX, KEY_MIN, VALUE_MAX, VALUE_MIN
from .engine import Engine


@dataclass(frozen=True)
class WorkloadSpec:
    """What to generate: op count, mix, key distribution, and threading."""

    op_count: int
    lookup_ratio: float = 0.0
    distribution: str = "uniform"       # "uniform" | "normal"
    lo: int = 0                         # uniform bounds, inclusive
    hi: int = KEY_MAX
    mean: float = 0.0                   # normal parameters
    stddev: float = 1000.0
    range_ops: int = 0
    range_size: int = 100
    seed: int = 0
    reader_threads: int = 1

    def validate(self) -> "WorkloadSpec":
        if self.op_count < 1:
            raise ValueError("op_count must be >= 1")
        if not (0.0 <= self.lookup_ratio <= 1.0):
            raise ValueError("lookup_ratio must lie in [0, 1]")
        if self.distribution not in ("uniform", "normal"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "normal" and self.stddev <= 0:
            raise ValueError("stddev must be > 0")
        if self.distribution == "uniform" and self.lo > self.hi:
            raise ValueError("uniform bounds reversed: lo > hi")
        if self.range_ops < 0 or self.range_size < 1:
            raise ValueError("bad range op settings")
        if self.reader_threads < 1:
            raise ValueError("reader_threads must be >= 1")
        return self


def _key_drawer(spec: WorkloadSpec, rng: random.Random):
    if spec.distribution == "uniform":
        lo, hi = spec.lo, spec.hi
        randint = rng.randint
        return lambda: randint(lo, hi)
    mean, stddev = spec.mean, spec.stddev
    gauss = rng.gauss

    def draw() -> int:
        # round half-to-even; redraw anything outside the 32-bit key range
        while True:
            key = round(gauss(mean, stddev))
            if KEY_MIN <= key <= KEY_MAX:
                return key
    return draw


def generate_ops(spec: WorkloadSpec) -> list[tuple]:
    """Deterministic op tuples: ('p', k, v), ('g', k) or ('r', lo, hi)."""
    spec.validate()
    rng = random.Random(spec.seed)
    n_get = round(spec.lookup_ratio * spec.op_count)
    n_put = spec.op_count - n_get
    kinds = ["p"] * n_put + ["g"] * n_get + ["r"] * spec.range_ops
    rng.shuffle(kinds)
    draw = _key_drawer(spec, rng)
    ops: list[tuple] = []
    for kind in kinds:
        if kind == "p":
            ops.append(("p", draw(), rng.randint(VALUE_MIN, VALUE_MAX)))
        elif kind == "g":
            ops.append(("g", draw()))
        else:
            lo = draw()
            ops.append(("r", lo, min(lo + spec.range_size, KEY_MAX)))
    return ops


def generate_script(spec: WorkloadSpec) -> str:
    """The DSL text for :func:`generate_ops` output."""
    lines = []
    for op in generate_ops(spec):
        lines.append(" ".join(str(part) for part in op))
    lines.append("")
    return "\n".join(lines)


def run_script(lines: Iterable[str], engine: Engine, out: TextIO,
               err: Optional[TextIO] = None) -> None:
    """Execute DSL lines against ``engine``.

    Malformed lines produce a diagnostic on ``err`` and are skipped; "q"
    or end of input stops execution.  Output is byte-deterministic for a
    given input and engine state.
    """
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        cmd = parts[0]
        try:
            if cmd == "q":
                return
            if cmd == "p":
                if len(parts) != 3:
                    raise ValueError("put needs a key and a value")
                engine.put(int(parts[1]), int(parts[2]))
            elif cmd == "g":
                if len(parts) != 2:
                    raise ValueError("get needs a key")
                value = engine.get(int(parts[1]))
                out.write("" if value is None else str(value))
                out.write("\n")
            elif cmd == "r":
                if len(parts) != 3:
                    raise ValueError("range needs two keys")
                pairs = engine.range(int(parts[1]), int(parts[2]))
                out.write(" ".join(f"{k}:{v}" for k, v in pairs))
                out.write("\n")
            elif cmd == "d":
                if len(parts) != 2:
                    raise ValueError("delete needs a key")
                engine.delete(int(parts[1]))
            else:
                raise ValueError(f"unknown command {cmd!r}")
        except ValueError as exc:
            if err is not None:
                err.write(f"line {number}: {exc}\n")
