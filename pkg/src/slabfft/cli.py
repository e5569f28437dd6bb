"""Command line tool: correctness suites and strategy benchmarks.

Subcommands:
  verify    run the oracle-equivalence, round-trip, exchange-reference and
            strategy-equivalence suites over a grid/procs cross product
  bench     time forward+inverse pairs per stage and emit CSV rows
  compare   run both strategies back to back on identical inputs

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from .dfft import forward, gather_spectral, inverse, plan, scatter_real
from .errors import ConfigurationError, SlabFftError
from .exchange import Strategy, exchange_strided_forward, exchange_transpose_forward, plan_exchange
from .layout import GlobalGrid, SpectralSlab, validate
from .oracle import dft3d_r2c_naive, global_exchange_reference
from .transport import CommMode, CommPattern, run_spmd

MAX_VERIFY_SIZE = 32  # the brute-force oracle is O(N^2) in grid points

CSV_COLUMNS = [
    "grid_n0",
    "grid_n1",
    "grid_n2",
    "p",
    "strategy",
    "comm_pattern",
    "iter",
    "t_total_us",
    "t_stage1_us",
    "t_exchange_us",
    "t_stage3_us",
    "bytes_packed",
    "bytes_wire",
    "bytes_unpacked",
]

ROUNDTRIP_RTOL = 1e-12
ORACLE_ATOL = 1e-10


def _parse_size(text: str) -> GlobalGrid:
    parts = [int(x) for x in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"--size wants 'n' or 'n0,n1,n2', got {text!r}")
    return GlobalGrid(*parts)


def _parse_procs(text: str) -> list[int]:
    try:
        procs = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--procs wants a comma list of ints, got {text!r}")
    if not procs or any(p < 1 for p in procs):
        raise argparse.ArgumentTypeError(f"--procs entries must be >= 1, got {text!r}")
    return procs


def _parse_strategies(text: str) -> list[Strategy]:
    if text == "both":
        return [Strategy.STRIDED, Strategy.TRANSPOSE]
    return [Strategy(text)]


def _random_field(grid: GlobalGrid, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((grid.n0, grid.n1, grid.n2))


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _run_pipeline(grid, p, strategy, pattern, mode, field, iters=0, warmup=0):
    """Run forward(+inverse pairs when timing) on p ranks.

    Returns (gathered spectrum, per-iteration records, worst round-trip
    relative rms error).  Records are (wall_us, stage timer dict, counter
    triple) per timed iteration, already merged across ranks.
    """
    slabs = scatter_real(field, grid, p)

    def body(ep):
        fp = plan(grid, ep, strategy, pattern)
        mine = slabs[ep.rank]
        recs = []
        for _ in range(warmup + iters):
            fp.reset_instrumentation()
            ep.barrier()
            t0 = time.perf_counter_ns()
            spec = forward(fp, mine)
            out = inverse(fp, spec)
            ep.barrier()
            t1 = time.perf_counter_ns()
            recs.append(((t1 - t0) / 1000.0, dict(fp.timers_us), fp.counters.snapshot()))
        fp.reset_instrumentation()
        spec = forward(fp, mine)
        kept = (spec.layout, spec.tag, spec.data.copy())
        out = inverse(fp, spec)
        rel = _rms(out.data - mine.data) / _rms(mine.data)
        return recs[warmup:], kept, rel

    per_rank = run_spmd(p, body, mode)
    gathered = gather_spectral([SpectralSlab(*r[1]) for r in per_rank])
    merged = []
    for it in range(iters):
        wall = max(r[0][it][0] for r in per_rank)
        stages = {
            key: max(r[0][it][1][key] for r in per_rank)
            for key in ("stage1_us", "exchange_us", "stage3_us")
        }
        counters = tuple(sum(r[0][it][2][i] for r in per_rank) for i in range(3))
        merged.append((wall, stages, counters))
    worst_rel = max(r[2] for r in per_rank)
    return gathered, merged, worst_rel


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_grids(max_size: int) -> list[GlobalGrid]:
    sizes = []
    s = 2
    while s <= max_size:
        sizes.append(s)
        s *= 2
    grids = [GlobalGrid(s, s, s) for s in sizes]
    if max_size >= 8:
        grids.append(GlobalGrid(4, 8, 4))
        grids.append(GlobalGrid(8, 4, 2))
    return grids


def _check(report, failures, grid, p, strategy, name, max_error, tol):
    status = "PASS" if max_error <= tol else "FAIL"
    line = (
        f"{grid.n0}x{grid.n1}x{grid.n2} p={p} {strategy:9s} {name:22s} "
        f"max_error={max_error:.3e} (tol {tol:.1e}) {status}"
    )
    report.append(line)
    if status == "FAIL":
        failures.append(line)


def cmd_verify(args) -> int:
    if args.max_size > MAX_VERIFY_SIZE:
        print(f"usage error: --max-size is capped at {MAX_VERIFY_SIZE} (brute-force oracle cost)")
        return 2
    for p in args.procs:
        # fail fast on process counts that no power-of-two grid can satisfy
        validate(GlobalGrid(args.max_size, args.max_size, args.max_size), p)
    mode = CommMode(args.mode)
    pattern = CommPattern(args.comm)
    report: list[str] = []
    failures: list[str] = []
    checks = 0
    for grid in _verify_grids(args.max_size):
        field = _random_field(grid, args.seed)
        ref = dft3d_r2c_naive(field)
        for p in args.procs:
            try:
                validate(grid, p)
            except ConfigurationError:
                continue
            spectra = {}
            for strategy in args.strategies:
                gathered, _, rel = _run_pipeline(grid, p, strategy, pattern, mode, field)
                spectra[strategy] = gathered
                _check(report, failures, grid, p, strategy.value, "oracle_equivalence",
                       float(np.max(np.abs(gathered - ref))), ORACLE_ATOL)
                _check(report, failures, grid, p, strategy.value, "round_trip",
                       rel, ROUNDTRIP_RTOL)
                checks += 2
                exch_err = _exchange_reference_error(grid, p, strategy, pattern, mode, args.seed)
                _check(report, failures, grid, p, strategy.value, "exchange_reference",
                       exch_err, 0.0)
                checks += 1
            if len(spectra) == 2:
                a = spectra[Strategy.STRIDED].view(np.float64)
                b = spectra[Strategy.TRANSPOSE].view(np.float64)
                bit_diff = 0.0 if np.array_equal(a, b) else float(np.max(np.abs(a - b)))
                _check(report, failures, grid, p, "both", "strategy_equivalence",
                       bit_diff, 0.0)
                checks += 1
    for line in report:
        print(line)
    print(f"{checks} checks, {len(failures)} failures")
    return 0 if not failures else 1


def _exchange_reference_error(grid, p, strategy, pattern, mode, seed) -> float:
    """Exchange a synthetic complex array and compare every rank's logical
    view against the pure index-arithmetic reference.  Also confirms the
    exchange is a pure permutation (same value multiset)."""
    rng = np.random.default_rng(seed + 1)
    shape = (grid.n0, grid.n1, grid.n2c)
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    expected = global_exchange_reference(data, p)
    n0p = grid.n0 // p

    def body(ep):
        xp = plan_exchange(grid, p, ep.rank, strategy, pattern)
        buf = data[ep.rank * n0p : (ep.rank + 1) * n0p].copy()
        if strategy is Strategy.STRIDED:
            spec = exchange_strided_forward(buf, xp, ep)
        else:
            spec = exchange_transpose_forward(buf, xp, ep)
        return spec.as_logical()

    views = run_spmd(p, body, mode)
    err = max(float(np.max(np.abs(views[q] - expected[q]))) for q in range(p))
    moved = np.sort_complex(np.concatenate([v.reshape(-1) for v in views]))
    original = np.sort_complex(data.reshape(-1))
    if not np.array_equal(moved, original):
        err = max(err, float(np.max(np.abs(moved - original))))
    return err


# ---------------------------------------------------------------------------
# bench / compare
# ---------------------------------------------------------------------------

def _bench_rows(grid, p, strategy, pattern, mode, iters, warmup, seed):
    field = _random_field(grid, seed)
    gathered, merged, rel = _bench_guarded(grid, p, strategy, pattern, mode, field, iters, warmup)
    rows = []
    for it, (wall, stages, counters) in enumerate(merged):
        rows.append(
            {
                "grid_n0": grid.n0,
                "grid_n1": grid.n1,
                "grid_n2": grid.n2,
                "p": p,
                "strategy": strategy.value,
                "comm_pattern": pattern.value,
                "iter": it,
                "t_total_us": f"{wall:.3f}",
                "t_stage1_us": f"{stages['stage1_us']:.3f}",
                "t_exchange_us": f"{stages['exchange_us']:.3f}",
                "t_stage3_us": f"{stages['stage3_us']:.3f}",
                "bytes_packed": counters[0],
                "bytes_wire": counters[1],
                "bytes_unpacked": counters[2],
            }
        )
    return rows, gathered, rel


def _bench_guarded(grid, p, strategy, pattern, mode, field, iters, warmup):
    gathered, merged, rel = _run_pipeline(grid, p, strategy, pattern, mode, field, iters, warmup)
    if rel > ROUNDTRIP_RTOL:
        raise SlabFftError(
            f"embedded correctness cross-check failed: round-trip error {rel:.3e} "
            f"exceeds {ROUNDTRIP_RTOL:.1e} for {strategy.value} on "
            f"{grid.n0}x{grid.n1}x{grid.n2}, p={p}"
        )
    return gathered, merged, rel


def _summarize(rows_by_strategy) -> list[str]:
    lines = []
    lines.append(f"{'strategy':10s} {'t_total_us(med)':>16s} {'t_exchange_us(med)':>19s} "
                 f"{'packed':>12s} {'wire':>12s} {'unpacked':>12s}")
    totals = {}
    for strategy, rows in rows_by_strategy.items():
        med_total = statistics.median(float(r["t_total_us"]) for r in rows)
        med_exch = statistics.median(float(r["t_exchange_us"]) for r in rows)
        packed = sum(r["bytes_packed"] for r in rows)
        wire = sum(r["bytes_wire"] for r in rows)
        unpacked = sum(r["bytes_unpacked"] for r in rows)
        totals[strategy] = (med_total, med_exch, packed + wire + unpacked)
        lines.append(
            f"{strategy:10s} {med_total:16.1f} {med_exch:19.1f} "
            f"{packed // max(len(rows), 1):12d} {wire // max(len(rows), 1):12d} "
            f"{unpacked // max(len(rows), 1):12d}"
        )
    if len(totals) == 2:
        t_s = totals[Strategy.STRIDED.value]
        t_t = totals[Strategy.TRANSPOSE.value]
        if t_s[2] > 0:
            lines.append(f"copy-byte ratio transpose/strided: {t_t[2] / t_s[2]:.2f}")
        else:
            lines.append("copy-byte ratio transpose/strided: n/a (no exchanged bytes at p=1)")
        if t_t[0] > 0:
            pct = 100.0 * (t_t[0] - t_s[0]) / t_t[0]
            lines.append(
                f"median wall-clock: strided {pct:+.1f}% vs transpose "
                "(informational only at simulator scale)"
            )
    return lines


def _write_csv(rows, path) -> None:
    if path is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def cmd_bench(args) -> int:
    if args.iters < 1:
        print("usage error: --iters must be >= 1")
        return 2
    mode = CommMode(args.mode)
    pattern = CommPattern(args.comm)
    grid = args.size
    all_rows = []
    for p in args.procs:
        validate(grid, p)
        rows_by_strategy = {}
        for strategy in args.strategies:
            rows, _, _ = _bench_rows(grid, p, strategy, pattern, mode, args.iters, args.warmup, args.seed)
            rows_by_strategy[strategy.value] = rows
            all_rows.extend(rows)
        print(f"grid {grid.n0}x{grid.n1}x{grid.n2}  p={p}  comm={pattern.value}  "
              f"mode={mode.value}  iters={args.iters}")
        for line in _summarize(rows_by_strategy):
            print(line)
    _write_csv(all_rows, args.output)
    return 0


def cmd_compare(args) -> int:
    if args.iters < 1:
        print("usage error: --iters must be >= 1")
        return 2
    mode = CommMode(args.mode)
    pattern = CommPattern(args.comm)
    grid = args.size
    field = _random_field(grid, args.seed)
    status = 0
    for p in args.procs:
        validate(grid, p)
        rows_by_strategy = {}
        spectra = {}
        for strategy in (Strategy.STRIDED, Strategy.TRANSPOSE):
            gathered, merged, _ = _bench_guarded(
                grid, p, strategy, pattern, mode, field, args.iters, args.warmup
            )
            spectra[strategy] = gathered
            rows = []
            for wall, stages, counters in merged:
                rows.append(
                    {
                        "t_total_us": f"{wall:.3f}",
                        "t_exchange_us": f"{stages['exchange_us']:.3f}",
                        "bytes_packed": counters[0],
                        "bytes_wire": counters[1],
                        "bytes_unpacked": counters[2],
                    }
                )
            rows_by_strategy[strategy.value] = rows
        same = np.array_equal(
            spectra[Strategy.STRIDED].view(np.float64),
            spectra[Strategy.TRANSPOSE].view(np.float64),
        )
        print(f"grid {grid.n0}x{grid.n1}x{grid.n2}  p={p}  comm={pattern.value}  "
              f"mode={mode.value}  iters={args.iters}")
        for line in _summarize(rows_by_strategy):
            print(line)
        print(f"spectra bitwise identical: {'yes' if same else 'NO'}")
        if not same:
            status = 1
    return status


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(sub, default_mode: str) -> None:
    sub.add_argument("--comm", choices=["pairwise", "collective"], default="pairwise",
                     help="all-to-all pattern (default %(default)s)")
    sub.add_argument("--mode", choices=["threaded", "serial"], default=default_mode,
                     help="rank execution mode (default %(default)s)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for deterministic input generation (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slabfft",
        description="Distributed 3D FFT simulator: verification suites and "
        "exchange-strategy benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run correctness suites against the brute-force oracle")
    pv.add_argument("--max-size", type=int, default=8,
                    help=f"largest grid edge, capped at {MAX_VERIFY_SIZE} (default %(default)s)")
    pv.add_argument("--procs", type=_parse_procs, default=[1, 2, 4],
                    help="comma list of rank counts (default 1,2,4)")
    pv.add_argument("--strategy", dest="strategies", type=_parse_strategies, default=list(Strategy),
                    help="strided, transpose, or both (default both)")
    _add_common(pv, "serial")
    pv.set_defaults(func=cmd_verify)

    pb = sub.add_parser("bench", help="time forward+inverse pairs and emit CSV")
    pb.add_argument("--size", type=_parse_size, required=True, help="grid as n or n0,n1,n2")
    pb.add_argument("--procs", type=_parse_procs, default=[4],
                    help="comma list of rank counts (default 4)")
    pb.add_argument("--strategy", dest="strategies", type=_parse_strategies, default=list(Strategy),
                    help="strided, transpose, or both (default both)")
    pb.add_argument("--iters", type=int, default=5, help="timed iterations (default %(default)s)")
    pb.add_argument("--warmup", type=int, default=1, help="untimed iterations (default %(default)s)")
    pb.add_argument("--output", default=None, help="CSV path (default: stdout)")
    _add_common(pb, "threaded")
    pb.set_defaults(func=cmd_bench)

    pc = sub.add_parser("compare", help="run both strategies on identical inputs")
    pc.add_argument("--size", type=_parse_size, required=True, help="grid as n or n0,n1,n2")
    pc.add_argument("--procs", type=_parse_procs, default=[4],
                    help="comma list of rank counts (default 4)")
    pc.add_argument("--iters", type=int, default=5, help="timed iterations (default %(default)s)")
    pc.add_argument("--warmup", type=int, default=1, help="untimed iterations (default %(default)s)")
    _add_common(pc, "threaded")
    pc.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}")
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}")
        return 2
    except SlabFftError as exc:
        print(f"check failure: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
