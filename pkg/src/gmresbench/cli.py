"""Command-line front end: solve systems from files, run benchmark
sweeps, and self-check the build.

Exit codes: 0 on success/convergence, 2 when a solve or a benchmark row
fails to converge, 1 on usage or input parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .backends import BackendId, DispatchPolicy, create_backend
from .bench import BenchSpec, run_benchmark, table_to_csv, table_to_json
from .gmres import ConvergenceCriterion, GmresConfig, GmresStatus, gmres_solve
from .linalg import DimensionMismatchError, Vector, matvec
from .mmio import MatrixMarketParseError, read_matrix_market, write_matrix_market
from .selftest import run_selftest

_BACKEND_NAMES = [b.value for b in BackendId]


class _Parser(argparse.ArgumentParser):
    # Usage problems exit 1; exit 2 is reserved for non-convergence.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_sizes(text: str) -> tuple[int, ...]:
    """Comma list ('100,200') or inclusive range ('1000:10000:1000')."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step < 1 or stop < start:
                raise ValueError
            return tuple(range(start, stop + 1, step))
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid sizes {text!r}, expected 'n1,n2,...' or 'start:stop:step'"
        ) from None


def _parse_backend_list(text: str) -> tuple[BackendId, ...]:
    try:
        return tuple(BackendId(name.strip()) for name in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid backend list {text!r}, choose from {', '.join(_BACKEND_NAMES)}"
        ) from None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restart", type=int, default=30, metavar="M",
                   help="Krylov dimension per restart cycle (default: 30)")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="convergence tolerance (default: 1e-8)")
    p.add_argument("--criterion", choices=["rel", "abs"], default="rel",
                   help="residual test: relative to ||b|| or absolute (default: rel)")
    p.add_argument("--max-restarts", type=int, default=1000, metavar="K",
                   help="restart budget after the first cycle (default: 1000)")
    p.add_argument("--reorthogonalize", action="store_true",
                   help="run a second orthogonalization pass per Arnoldi step")
    p.add_argument("--level1-threshold", type=int, default=500_000, metavar="N",
                   help="min vector elements before level-1 ops leave the serial host "
                        "(default: 500000)")


def _solver_config(args) -> GmresConfig:
    return GmresConfig(
        restart_m=args.restart,
        tol=args.tol,
        criterion=ConvergenceCriterion(args.criterion),
        max_restarts=args.max_restarts,
        reorthogonalize=args.reorthogonalize,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmresbench",
                     description="Restarted GMRES(m) solver and backend benchmark.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve a system read from Matrix Market files")
    solve.add_argument("--matrix", required=True, metavar="PATH",
                       help="square system matrix (Matrix Market)")
    solve.add_argument("--rhs", metavar="PATH",
                       help="right-hand side vector; default is A times the all-ones "
                            "vector, so the expected solution is all ones")
    solve.add_argument("--out", metavar="PATH",
                       help="write the solution vector to this Matrix Market file")
    solve.add_argument("--backend", choices=_BACKEND_NAMES, default="serial",
                       help="execution backend (default: serial)")
    _add_solver_flags(solve)

    bench = sub.add_parser("bench", help="run a speedup sweep against the serial baseline")
    bench.add_argument("--sizes", type=_parse_sizes, default=_parse_sizes("1000:10000:1000"),
                       help="problem sizes, 'n1,n2,...' or 'start:stop:step' "
                            "(default: 1000:10000:1000)")
    bench.add_argument("--backend", type=_parse_backend_list, default=(BackendId.OFFLOAD_MODEL,),
                       metavar="LIST",
                       help="comma list of backends to compare against the serial baseline "
                            f"(default: offload-model; choices: {', '.join(_BACKEND_NAMES)})")
    bench.add_argument("--repeats", type=int, default=5,
                       help="timed solves per backend and size (default: 5)")
    bench.add_argument("--warmup", type=int, default=1,
                       help="untimed warmup solves per backend and size (default: 1)")
    bench.add_argument("--seed", type=int, default=42,
                       help="PCG64 seed for problem generation (default: 42)")
    bench.add_argument("--format", choices=["csv", "json"], default="csv",
                       help="output format (default: csv)")
    bench.add_argument("--output", metavar="PATH",
                       help="write the table to this file instead of stdout")
    _add_solver_flags(bench)

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def _cmd_solve(args) -> int:
    try:
        a = read_matrix_market(args.matrix)
        if args.rhs is not None:
            b = read_matrix_market(args.rhs, want="vector")
        else:
            b = matvec(a, Vector([1.0] * a.cols))
        backend = create_backend(BackendId(args.backend))
        policy = DispatchPolicy(
            level1_threshold=args.level1_threshold, enabled_backend=backend.id_
        )
        config = _solver_config(args)
        t0 = time.perf_counter()
        result = gmres_solve(a, b, config=config, backend=backend, policy=policy)
        elapsed = time.perf_counter() - t0
    except (MatrixMarketParseError, DimensionMismatchError, OSError, ValueError) as err:
        print(f"gmresbench solve: error: {err}", file=sys.stderr)
        return 1

    report = {
        "n": a.rows,
        "status": result.status.value,
        "iterations": result.total_inner_iterations,
        "restarts": result.restarts_used,
        "matvecs": result.total_matvecs,
        "final_residual": result.final_residual,
        "elapsed_seconds": elapsed,
        "backend": args.backend,
    }
    if args.out is not None:
        write_matrix_market(args.out, result.x)
        report["solution_path"] = args.out
    print(json.dumps(report, indent=2))
    return 0 if result.status is GmresStatus.CONVERGED else 2


def _cmd_bench(args) -> int:
    try:
        spec = BenchSpec(
            sizes=args.sizes,
            backends=args.backend,
            repeats=args.repeats,
            warmup=args.warmup,
            seed=args.seed,
            solver=_solver_config(args),
            level1_threshold=args.level1_threshold,
        )
    except ValueError as err:
        print(f"gmresbench bench: error: {err}", file=sys.stderr)
        return 1
    table = run_benchmark(spec)
    text = table_to_csv(table) if args.format == "csv" else table_to_json(table)
    if args.output is not None:
        with open(args.output, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if not table.ok():
        for err in table.errors:
            print(f"gmresbench bench: row n={err.n} failed: {err.message}", file=sys.stderr)
        return 2
    return 0


def _cmd_selftest(_args) -> int:
    results = run_selftest()
    for res in results:
        marker = "PASS" if res.passed else "FAIL"
        print(f"[{marker}] {res.name}: {res.detail}")
    failed = sum(1 for r in results if not r.passed)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "bench":
        return _cmd_bench(args)
    return _cmd_selftest(args)


if __name__ == "__main__":
    sys.exit(main())
