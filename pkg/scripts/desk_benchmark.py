"""Desk-scale comparison of all methods on freshly generated instance batches.

Example::

    python scripts/desk_benchmark.py --d 10 20 --count 20 --out results/
"""

import argparse
import logging
from pathlib import Path

from qvrp.bench import DESK_ROUTING_BUDGET, METHODS, BenchConfig, emit_csv, run_batch, summarize, write_summary_csv
from qvrp.instance_gen import GenConfig, gen_batch
from qvrp.model import PenaltyParams
from qvrp.routing import LocalSearchConfig, solve_vrp_local_search


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--d", type=int, nargs="+", default=[10, 20])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--methods", default=",".join(METHODS))
    ap.add_argument("--unit", action="store_true", help="unit quantities (default: Dirichlet quantities)")
    ap.add_argument("--quota", type=float, default=None,
                    help="quota override; by default d/2 below d=20 (the stock quota of 20 is never binding there)")
    ap.add_argument("--budget", type=int, default=DESK_ROUTING_BUDGET)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ls = LocalSearchConfig(max_evaluations=args.budget)
    cfg = BenchConfig(routing=ls, seed=args.seed)
    methods = args.methods.split(",")

    for d in args.d:
        quota = args.quota if args.quota is not None else (d / 2 if d < 20 else None)
        gen = GenConfig(d=d, seed=args.seed, unit_quantities=args.unit, quota_override=quota)

        def keep_all(inst):
            return solve_vrp_local_search(inst, [True] * inst.d, PenaltyParams.for_instance(inst), ls)

        instances = gen_batch(gen, args.count, routing_fn=keep_all)
        rows = run_batch(methods, [(f"d{d}_seed{i.seed}", i) for i in instances], cfg, args.workers)
        emit_csv(rows, out / f"d{d}.csv")
        summary = summarize(rows)
        write_summary_csv(summary, out / f"d{d}_summary.csv")
        print(f"d={d}: {len(instances)} instances")
        for s in summary:
            print(
                f"  {s['method']:>7}  reward {s['mean_reward']:.4f}  vs dp {s['mean_relative_reward']:+.4f}"
                f"  {s['mean_runtime_ms']:9.2f} ms  admissible {s['admissible_rate']:.0%}"
            )


if __name__ == "__main__":
    main()
