#!/usr/bin/env python3
"""Print the per-iteration residual trace for one generated problem.

Handy for eyeballing convergence behavior under different restart
lengths and tolerances.
"""

import argparse

from gmresbench import GmresConfig, ResidualKind, gmres_solve
from gmresbench.bench import generate_problem


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--restart", type=int, default=30)
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--reorthogonalize", action="store_true")
    args = parser.parse_args()

    a, b, _ = generate_problem(args.n, args.seed)
    config = GmresConfig(
        restart_m=args.restart, tol=args.tol, reorthogonalize=args.reorthogonalize
    )
    result = gmres_solve(a, b, config=config)

    cycle = -1
    step = 0
    for rec in result.residual_history:
        if rec.kind is ResidualKind.RECOMPUTED:
            cycle += 1
            label = "initial" if cycle == 0 else "restart"
            print(f"-- cycle {cycle} ({label}): ||r|| = {rec.value:.6e}")
            continue
        step += 1
        print(f"   iter {step:3d}: estimate {rec.value:.6e}")
    print(
        f"status={result.status.value} inner={result.total_inner_iterations} "
        f"restarts={result.restarts_used} matvecs={result.total_matvecs} "
        f"final residual={result.final_residual:.6e}"
    )


if __name__ == "__main__":
    main()
