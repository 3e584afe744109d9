"""Average best reward found per round by EXP3 (and optionally LRI) over a batch.

Writes one CSV row per round: step, mean best reward, fraction of runs whose
best solution is admissible so far.
"""

import argparse
import csv

import numpy as np

from qvrp.bandit import BanditConfig, exp3_run, lri_run
from qvrp.instance_gen import GenConfig, gen_batch
from qvrp.model import PenaltyParams
from qvrp.routing import LocalSearchConfig, solve_vrp_local_search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--horizon", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--learner", choices=["exp3", "lri"], default="exp3")
    ap.add_argument("--out", default="exp3_trace.csv")
    args = ap.parse_args()

    ls = LocalSearchConfig(max_evaluations=200_000)

    def keep_all(inst):
        return solve_vrp_local_search(inst, [True] * inst.d, PenaltyParams.for_instance(inst), ls)

    instances = gen_batch(GenConfig(d=args.d, seed=args.seed, unit_quantities=False), args.count, keep_all)
    run = exp3_run if args.learner == "exp3" else lri_run
    rewards = np.zeros((len(instances), args.horizon))
    feasible = np.zeros_like(rewards)
    for n, inst in enumerate(instances):
        res = run(inst, PenaltyParams.for_instance(inst), BanditConfig(horizon=args.horizon, seed=args.seed))
        rewards[n] = [row["best_reward"] for row in res.trace]
        feasible[n] = [row["emission"] <= inst.quota for row in res.trace]

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "mean_best_reward", "admissible_fraction"])
        for t in range(args.horizon):
            w.writerow([t + 1, f"{rewards[:, t].mean():.6f}", f"{feasible[:, t].mean():.3f}"])
    print(f"final mean best reward {rewards[:, -1].mean():.4f}, admissible {feasible[:, -1].mean():.0%}")


if __name__ == "__main__":
    main()
