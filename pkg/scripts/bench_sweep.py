#!/usr/bin/env python3
"""Run the default speedup sweep and write the table to disk.

Equivalent to:

    gmresbench bench --sizes 1000:10000:1000 \
        --backend parallel,offload-model --output speedup_table.csv

but kept as a script so the sweep is easy to tweak during experiments.
"""

import argparse
import sys
import time

from gmresbench import BackendId, BenchSpec, run_benchmark, table_to_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--top", type=int, default=10_000,
                        help="largest problem size (default: 10000)")
    parser.add_argument("--step", type=int, default=1_000,
                        help="size increment (default: 1000)")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--output", default="speedup_table.csv")
    args = parser.parse_args()

    spec = BenchSpec(
        sizes=tuple(range(args.step, args.top + 1, args.step)),
        backends=(BackendId.PARALLEL_HOST, BackendId.OFFLOAD_MODEL),
        repeats=args.repeats,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    table = run_benchmark(spec)
    elapsed = time.perf_counter() - t0

    with open(args.output, "w", encoding="ascii", newline="\n") as fh:
        fh.write(table_to_csv(table))
    print(f"{len(table.rows)} rows in {elapsed:.1f}s -> {args.output}")
    for err in table.errors:
        print(f"row n={err.n} failed: {err.message}", file=sys.stderr)
    return 0 if table.ok() else 2


if __name__ == "__main__":
    sys.exit(main())
