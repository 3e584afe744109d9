"""Command-line entry point: ``qvrp {gen,route,solve,bench,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .anneal import SaConfig
from .bandit import BanditConfig, exp3_run, lri_run
from .bench import (
    DESK_ROUTING_BUDGET,
    METHODS,
    BenchConfig,
    emit_csv,
    run_batch,
    run_method,
    summarize,
    write_summary_csv,
)
from .instance_gen import GenConfig, filter_nontrivial, gen_synthetic
from .model import (
    OMIT,
    Instance,
    PenaltyParams,
    Routing,
    omitted_quantity,
    routing_cost,
    routing_emission,
)
from .routing import LocalSearchConfig, route_for_vehicle_assignment, solve_vrp_local_search
from .verify import run_all


def _routing_json(inst: Instance, R: Routing) -> dict:
    return {
        "routes": [list(r) for r in R.routes],
        "cost": routing_cost(inst, R),
        "emission": routing_emission(inst, R),
        "oq": omitted_quantity(inst, R),
    }


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ls = LocalSearchConfig(max_evaluations=args.budget)
    written, seed = 0, args.seed
    while written < args.count:
        cfg = GenConfig(d=args.d, seed=seed, unit_quantities=not args.nonunit, quota_override=args.quota)
        inst = gen_synthetic(cfg)
        seed += 1
        if not args.keep_all:
            pp = PenaltyParams.for_instance(inst)
            if not filter_nontrivial(inst, lambda I: solve_vrp_local_search(I, [True] * I.d, pp, ls)):
                continue
        inst.save(out / f"d{args.d}_seed{cfg.seed}.json")
        written += 1
    print(f"wrote {written} instances to {out}")
    return 0


def cmd_route(args) -> int:
    inst = Instance.load(args.instance)
    pp = PenaltyParams.for_instance(inst)
    data = json.loads(Path(args.assignment).read_text())
    if "keep" in data:
        R = solve_vrp_local_search(inst, [bool(k) for k in data["keep"]], pp, LocalSearchConfig(max_evaluations=args.budget))
    elif "assign" in data:
        a = [OMIT if x is None else int(x) for x in data["assign"]]
        R = route_for_vehicle_assignment(inst, a, pp)
    else:
        print("assignment JSON needs a 'keep' or 'assign' array", file=sys.stderr)
        return 2
    print(json.dumps(_routing_json(inst, R)))
    return 0


def _bench_config(args) -> BenchConfig:
    sa = SaConfig(tau_init=args.tau0, cooling=args.cooling)
    bandit = BanditConfig(horizon=args.horizon)
    return BenchConfig(routing=LocalSearchConfig(max_evaluations=args.budget), sa=sa, bandit=bandit, seed=args.seed)


def cmd_solve(args) -> int:
    inst = Instance.load(args.instance)
    cfg = _bench_config(args)
    routing = Routing.from_dict(json.loads(Path(args.routing).read_text())) if args.routing else None
    if args.trace and args.method in ("exp3", "lri"):
        pp = PenaltyParams.for_instance(inst, cfg.lam)
        run = exp3_run if args.method == "exp3" else lri_run
        res = run(inst, pp, replace(cfg.bandit, seed=cfg.seed))
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["step", "best_reward", "emission", "oq"])
            writer.writeheader()
            writer.writerows(res.trace)
    report = run_method(args.method, inst, cfg, Path(args.instance).stem, routing)
    print(json.dumps(report.to_json()))
    return 0


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = run_batch(methods, args.instances, _bench_config(args), workers=args.workers)
    emit_csv(rows, args.out)
    summary = summarize(rows)
    if args.summary:
        write_summary_csv(summary, args.summary)
    for s in summary:
        print(
            f"{s['method']:>7}  n={s['n']:<3d} reward={s['mean_reward']:.4f} "
            f"rel={s['mean_relative_reward']:+.4f} runtime={s['mean_runtime_ms']:.2f}ms "
            f"admissible={s['admissible_rate']:.0%}"
        )
    return 0


def cmd_verify(args) -> int:
    checks = run_all(knapsack_count=args.knapsack_count, seed=args.seed)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}")
    return 0 if all(c.ok for c in checks) else 1


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DESK_ROUTING_BUDGET, help="local-search move evaluations")
    p.add_argument("--tau0", type=float, default=5000.0)
    p.add_argument("--cooling", type=float, default=0.995)
    p.add_argument("--horizon", type=int, default=2000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvrp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic instances")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-all", action="store_true", help="do not discard quota-feasible instances")
    p.add_argument("--nonunit", action="store_true", help="Dirichlet quantities instead of unit demands")
    p.add_argument("--quota", type=float, default=None)
    p.add_argument("--budget", type=int, default=DESK_ROUTING_BUDGET)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("route", help="route an assignment")
    p.add_argument("--instance", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--budget", type=int, default=DESK_ROUTING_BUDGET)
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; routing is deterministic")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("solve", help="run one method on one instance")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--routing", help="fixed routing JSON for dp/greedy")
    p.add_argument("--trace", help="per-round CSV for exp3/lri")
    _add_solver_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run methods over an instance directory")
    p.add_argument("--instances", required=True)
    p.add_argument("--methods", default="dp,greedy,oa-sa,va-sa,exp3")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="optional per-method summary CSV")
    p.add_argument("--workers", type=int, default=1)
    _add_solver_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="gap-instance and knapsack-reduction self-checks")
    p.add_argument("--knapsack-count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
