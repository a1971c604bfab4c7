"""Command-line workload driver.

    slsm run    [--data DIR] [param flags] < script
    slsm gen    --ops N --ratio X --dist uniform|normal --seed K ...
    slsm bench  [--data DIR] [param flags] [workload flags] [--out CSV]
    slsm sweep  --grid FILE --out CSV [workload flags]
    slsm cost   --n N [param flags]

Tuning parameters come from flags, falling back to SLSM_* environment
variables (SLSM_R, SLSM_RN, SLSM_EPSILON, SLSM_D, SLSM_M, SLSM_MU), then
to the built-in baseline.
"""

from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
from dataclasses import replace

from .bench import bench, format_report, load_grid, sweep, write_report
from .core import KEY_MAX, TuningParams, params_from_env, validate
from .engine import Engine, cost_model
from .workload import WorkloadSpec, generate_script, run_script


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("tuning parameters")
    group.add_argument("--R", type=int, dest="r", help="memory runs")
    group.add_argument("--Rn", type=int, dest="run_size",
                       help="elements per memory run")
    group.add_argument("--epsilon", type=float, help="Bloom FP rate, in (0,1)")
    group.add_argument("--D", type=int, dest="d", help="disk runs per level")
    group.add_argument("--m", type=float, help="fraction of runs merged, (0,1]")
    group.add_argument("--mu", type=int, help="fence pointer page size")


def _params_from_args(args: argparse.Namespace) -> TuningParams:
    params = params_from_env()
    overrides = {name: getattr(args, name) for name in
                 ("r", "run_size", "epsilon", "d", "m", "mu")
                 if getattr(args, name, None) is not None}
    if overrides:
        params = replace(params, **overrides)
    return validate(params)


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", metavar="DIR",
                        help="data directory (default: temporary)")
    parser.add_argument("--seed", type=int, default=0,
                        help="engine / workload RNG seed")
    parser.add_argument("--no-bloom", action="store_true",
                        help="disable Bloom filters")
    parser.add_argument("--no-merge-thread", action="store_true",
                        help="merge synchronously on the writer thread")


def _add_workload_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("workload")
    group.add_argument("--ops", type=int, default=1000, help="operation count")
    group.add_argument("--ratio", type=float, default=0.0,
                       help="fraction of ops that are lookups")
    group.add_argument("--dist", choices=("uniform", "normal"),
                       default="uniform", help="key distribution")
    group.add_argument("--lo", type=int, default=0,
                       help="uniform lower bound (inclusive)")
    group.add_argument("--hi", type=int, default=KEY_MAX,
                       help="uniform upper bound (inclusive)")
    group.add_argument("--mean", type=float, default=0.0, help="normal mean")
    group.add_argument("--stddev", type=float, default=1000.0,
                       help="normal standard deviation")
    group.add_argument("--range-ops", type=int, default=0,
                       help="number of range ops to mix in")
    group.add_argument("--range-size", type=int, default=100,
                       help="width of each range op")
    group.add_argument("--reader-threads", type=int, default=1,
                       help="concurrent reader threads for the lookup phase")


def _spec_from_args(args: argparse.Namespace) -> WorkloadSpec:
    return WorkloadSpec(
        op_count=args.ops, lookup_ratio=args.ratio, distribution=args.dist,
        lo=args.lo, hi=args.hi, mean=args.mean, stddev=args.stddev,
        range_ops=args.range_ops, range_size=args.range_size,
        seed=args.seed, reader_threads=args.reader_threads).validate()


def _cmd_run(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    data_dir = args.data
    cleanup = data_dir is None
    if data_dir is None:
        data_dir = tempfile.mkdtemp(prefix="slsm-run-")
    engine = Engine(data_dir, params, seed=args.seed,
                    use_bloom=not args.no_bloom,
                    merge_threading=not args.no_merge_thread)
    try:
        run_script(sys.stdin, engine, sys.stdout, sys.stderr)
    finally:
        engine.close()
        if cleanup:
            shutil.rmtree(data_dir, ignore_errors=True)
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    sys.stdout.write(generate_script(_spec_from_args(args)))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    report = bench(_spec_from_args(args), _params_from_args(args),
                   data_dir=args.data, no_bloom=args.no_bloom,
                   no_merge_thread=args.no_merge_thread,
                   engine_seed=args.seed)
    sys.stdout.write(format_report(report))
    if args.out:
        write_report(report, args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    grid = load_grid(args.grid)
    reports = sweep(grid, _spec_from_args(args), args.out,
                    base_params=_params_from_args(args),
                    no_bloom=args.no_bloom,
                    no_merge_thread=args.no_merge_thread)
    sys.stdout.write(f"{len(reports)} new rows -> {args.out}\n")
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    estimate = cost_model(_params_from_args(args), args.n)
    sys.stdout.write(
        f"levels={estimate.levels} insert_cost={estimate.insert_cost:.3f} "
        f"lookup_cost={estimate.lookup_cost:.6f}"
        f"{' (degenerate geometry: d*m rounds to 1)' if estimate.degenerate_geometry else ''}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slsm",
        description="skiplist-based LSM tree workload driver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a script from stdin")
    _add_param_flags(p_run)
    _add_engine_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen", help="generate a workload script")
    _add_workload_flags(p_gen)
    p_gen.add_argument("--seed", type=int, default=0, help="workload RNG seed")
    p_gen.set_defaults(func=_cmd_gen)

    p_bench = sub.add_parser("bench", help="run one benchmark")
    _add_param_flags(p_bench)
    _add_engine_flags(p_bench)
    _add_workload_flags(p_bench)
    p_bench.add_argument("--out", metavar="CSV", help="append the row here")
    p_bench.set_defaults(func=_cmd_bench)

    p_sweep = sub.add_parser("sweep", help="bench a parameter grid")
    p_sweep.add_argument("--grid", required=True, metavar="FILE",
                         help="JSON file: parameter -> list of values")
    p_sweep.add_argument("--out", required=True, metavar="CSV",
                         help="resumable output table")
    _add_param_flags(p_sweep)
    _add_engine_flags(p_sweep)
    _add_workload_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cost = sub.add_parser("cost", help="evaluate the closed-form cost model")
    p_cost.add_argument("--n", type=int, required=True,
                        help="number of stored elements")
    _add_param_flags(p_cost)
    p_cost.set_defaults(func=_cmd_cost)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"slsm: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
