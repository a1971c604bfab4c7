"""Benchmark driver: phase timings, reader-thread scaling, sweeps.

A bench run executes one generated workload in phases -- all puts (and
deletes), then all gets, then any range ops -- so each phase gets its own
throughput number; the combined figure weights the phase throughputs by
op count.  The insert phase also tracks the largest gap between two
consecutive puts, which is where synchronous merges show up as stalls.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
import shutil
import tempfile
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

from .core import TuningParams, validate
from .engine import Engine
from .workload import WorkloadSpec, generate_ops

CSV_COLUMNS = [
    "r", "run_size", "epsilon", "d", "m", "mu", "dm",
    "ops", "lookup_ratio", "distribution", "stddev", "seed",
    "reader_threads", "no_bloom", "no_merge_thread",
    "insert_ops", "insert_secs", "insert_per_sec",
    "lookup_ops", "lookup_secs", "lookup_per_sec",
    "range_ops", "range_secs", "range_per_sec",
    "weighted_per_sec", "max_insert_gap_secs", "total_secs",
]


@dataclass
class BenchReport:
    """One benchmark run's measurements plus the configuration that
    produced them."""

    params: TuningParams
    spec: WorkloadSpec
    no_bloom: bool = False
    no_merge_thread: bool = False
    insert_ops: int = 0
    insert_secs: float = 0.0
    lookup_ops: int = 0
    lookup_secs: float = 0.0
    range_ops: int = 0
    range_secs: float = 0.0
    max_insert_gap_secs: float = 0.0
    total_secs: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def insert_per_sec(self) -> float:
        return self.insert_ops / self.insert_secs if self.insert_secs else 0.0

    @property
    def lookup_per_sec(self) -> float:
        return self.lookup_ops / self.lookup_secs if self.lookup_secs else 0.0

    @property
    def range_per_sec(self) -> float:
        return self.range_ops / self.range_secs if self.range_secs else 0.0

    @property
    def weighted_per_sec(self) -> float:
        """Phase throughputs weighted by op counts (inserts and lookups)."""
        total = self.insert_ops + self.lookup_ops
        if not total:
            return 0.0
        return (self.insert_ops * self.insert_per_sec
                + self.lookup_ops * self.lookup_per_sec) / total

    def row(self) -> dict:
        return {
            "r": self.params.r,
            "run_size": self.params.run_size,
            "epsilon": self.params.epsilon,
            "d": self.params.d,
            "m": self.params.m,
            "mu": self.params.mu,
            "dm": self.params.d * self.params.m,
            "ops": self.spec.op_count,
            "lookup_ratio": self.spec.lookup_ratio,
            "distribution": self.spec.distribution,
            "stddev": self.spec.stddev,
            "seed": self.spec.seed,
            "reader_threads": self.spec.reader_threads,
            "no_bloom": int(self.no_bloom),
            "no_merge_thread": int(self.no_merge_thread),
            "insert_ops": self.insert_ops,
            "insert_secs": round(self.insert_secs, 6),
            "insert_per_sec": round(self.insert_per_sec, 3),
            "lookup_ops": self.lookup_ops,
            "lookup_secs": round(self.lookup_secs, 6),
            "lookup_per_sec": round(self.lookup_per_sec, 3),
            "range_ops": self.range_ops,
            "range_secs": round(self.range_secs, 6),
            "range_per_sec": round(self.range_per_sec, 3),
            "weighted_per_sec": round(self.weighted_per_sec, 3),
            "max_insert_gap_secs": round(self.max_insert_gap_secs, 6),
            "total_secs": round(self.total_secs, 6),
        }


def run_lookup_phase(engine: Engine, keys: list[int],
                     threads: int = 1) -> float:
    """Issue every get, splitting across ``threads`` readers; returns the
    wall-clock seconds for the whole phase."""
    if threads <= 1:
        get = engine.get
        start = time.perf_counter()
        for key in keys:
            get(key)
        return time.perf_counter() - start

    chunks = [keys[i::threads] for i in range(threads)]
    barrier = threading.Barrier(threads + 1)

    def reader(chunk: list[int]) -> None:
        get = engine.get
        barrier.wait()
        for key in chunk:
            get(key)

    workers = [threading.Thread(target=reader, args=(chunk,), daemon=True)
               for chunk in chunks]
    for worker in workers:
        worker.start()
    barrier.wait()
    start = time.perf_counter()
    for worker in workers:
        worker.join()
    return time.perf_counter() - start


def bench(spec: WorkloadSpec, params: TuningParams, *,
          data_dir: Optional[str] = None, no_bloom: bool = False,
          no_merge_thread: bool = False, engine_seed: int = 0) -> BenchReport:
    """Execute one workload and measure it; uses a temporary data directory
    unless one is supplied."""
    validate(params)
    spec.validate()
    ops = generate_ops(spec)
    puts = [op for op in ops if op[0] == "p"]
    gets = [op[1] for op in ops if op[0] == "g"]
    ranges = [(op[1], op[2]) for op in ops if op[0] == "r"]

    report = BenchReport(params=params, spec=spec, no_bloom=no_bloom,
                         no_merge_thread=no_merge_thread)
    cleanup = data_dir is None
    if data_dir is None:
        data_dir = tempfile.mkdtemp(prefix="slsm-bench-")
    total_start = time.perf_counter()
    engine = Engine(data_dir, params, seed=engine_seed,
                    use_bloom=not no_bloom,
                    merge_threading=not no_merge_thread)
    try:
        put = engine.put
        clock = time.perf_counter
        max_gap = 0.0
        prev = clock()
        phase_start = prev
        for _, key, value in puts:
            put(key, value)
            now = clock()
            if now - prev > max_gap:
                max_gap = now - prev
            prev = now
        engine.wait_for_merge()
        report.insert_secs = clock() - phase_start
        report.insert_ops = len(puts)
        report.max_insert_gap_secs = max_gap

        if gets:
            report.lookup_secs = run_lookup_phase(engine, gets,
                                                  spec.reader_threads)
            report.lookup_ops = len(gets)

        if ranges:
            phase_start = clock()
            for lo, hi in ranges:
                engine.range(lo, hi)
            report.range_secs = clock() - phase_start
            report.range_ops = len(ranges)

        report.total_secs = clock() - total_start
    finally:
        engine.close()
        if cleanup:
            shutil.rmtree(data_dir, ignore_errors=True)
    return report


def write_report(report: BenchReport, path: str) -> None:
    """Append one CSV row, creating the file with a header if needed."""
    is_new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if is_new:
            writer.writeheader()
        writer.writerow(report.row())


def format_report(report: BenchReport) -> str:
    """The CSV header plus this report's row, as text."""
    row = report.row()
    header = ",".join(CSV_COLUMNS)
    values = ",".join(str(row[col]) for col in CSV_COLUMNS)
    return f"{header}\n{values}\n"


_GRID_FIELDS = ("r", "run_size", "epsilon", "d", "m", "mu")


def load_grid(path: str) -> dict[str, list]:
    """Parameter grid from a JSON object of field -> list of values."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    grid: dict[str, list] = {}
    for key, values in raw.items():
        if key not in _GRID_FIELDS:
            raise ValueError(f"unknown grid parameter {key!r}; "
                             f"expected one of {_GRID_FIELDS}")
        if not isinstance(values, list) or not values:
            raise ValueError(f"grid parameter {key!r} needs a nonempty list")
        grid[key] = values
    if not grid:
        raise ValueError("empty grid")
    return grid


def _completed_points(out_path: str) -> set[tuple]:
    done: set[tuple] = set()
    if not os.path.exists(out_path):
        return done
    with open(out_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                done.add((int(row["r"]), int(row["run_size"]),
                          float(row["epsilon"]), int(row["d"]),
                          float(row["m"]), int(row["mu"])))
            except (KeyError, ValueError):
                continue
    return done


def sweep(grid: dict[str, list], spec: WorkloadSpec, out_path: str, *,
          base_params: Optional[TuningParams] = None, no_bloom: bool = False,
          no_merge_thread: bool = False) -> list[BenchReport]:
    """Bench every point of the parameter grid's Cartesian product.

    Resumable: points whose parameter tuple already appears in the output
    CSV are skipped.
    """
    base = base_params if base_params is not None else TuningParams()
    names = sorted(grid)
    done = _completed_points(out_path)
    reports = []
    for combo in itertools.product(*(grid[name] for name in names)):
        params = TuningParams(**{**asdict(base), **dict(zip(names, combo))})
        key = (params.r, params.run_size, float(params.epsilon), params.d,
               float(params.m), params.mu)
        if key in done:
            continue
        report = bench(spec, params, no_bloom=no_bloom,
                       no_merge_thread=no_merge_thread)
        write_report(report, out_path)
        reports.append(report)
    return reports
