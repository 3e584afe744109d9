"""Batch experiment harness: run solvers over instance sets and tabulate rewards."""

from __future__ import annotations

import csv
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .anneal import SaConfig, oa_sa, va_sa
from .bandit import BanditConfig, exp3_run, lri_run
from .model import (
    DEFAULT_LAMBDA,
    Instance,
    InfeasibleAssignmentError,
    InfeasibleError,
    PenaltyParams,
    Routing,
    is_admissible,
    omitted_quantity,
    routing_cost,
    routing_emission,
    terminal_reward,
)
from .routing import LocalSearchConfig, solve_vrp_local_search
from .shortcut import greedy_removal, solve_shortcut_multitype

log = logging.getLogger(__name__)

METHODS = ("dp", "greedy", "oa-sa", "va-sa", "exp3", "lri")
FIXED_ROUTING_METHODS = ("dp", "greedy")
CSV_COLUMNS = ("method", "instance_id", "seed", "oq", "cost", "emission", "admissible", "reward", "runtime_ms")

# desk-scale routing budget: the pinned local-search default shrunk 10x
DESK_ROUTING_BUDGET = 1_500_000


@dataclass(frozen=True)
class BenchConfig:
    lam: float = DEFAULT_LAMBDA
    routing: LocalSearchConfig = LocalSearchConfig(max_evaluations=DESK_ROUTING_BUDGET)
    sa: SaConfig = SaConfig()
    bandit: BanditConfig = BanditConfig()
    seed: int = 0


@dataclass
class SolveReport:
    method: str
    instance_id: str
    seed: int
    oq: int
    cost: float
    emission: float
    admissible: bool
    reward: float
    runtime_ms: float
    routing: Routing | None = field(default=None, repr=False)
    error: str | None = None

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}

    def to_json(self) -> dict:
        out = self.row()
        out["routes"] = None if self.routing is None else [list(r) for r in self.routing.routes]
        if self.error:
            out["error"] = self.error
        return out


def initial_routing(inst: Instance, cfg: BenchConfig) -> Routing:
    pp = PenaltyParams.for_instance(inst, cfg.lam)
    return solve_vrp_local_search(inst, [True] * inst.d, pp, cfg.routing)


def _solve(method: str, inst: Instance, pp: PenaltyParams, cfg: BenchConfig, R0: Routing | None) -> Routing:
    if method == "dp":
        return solve_shortcut_multitype(inst, R0)[1]
    if method == "greedy":
        return greedy_removal(inst, R0, pp)[1]
    sa = SaConfig(**{**asdict(cfg.sa), "seed": cfg.seed})
    if method == "oa-sa":
        return oa_sa(inst, pp, sa).routing
    if method == "va-sa":
        return va_sa(inst, pp, sa).routing
    bandit = BanditConfig(**{**asdict(cfg.bandit), "seed": cfg.seed})
    if method == "exp3":
        return exp3_run(inst, pp, bandit).routing
    return lri_run(inst, pp, bandit).routing


def run_method(
    method: str,
    inst: Instance,
    cfg: BenchConfig = BenchConfig(),
    instance_id: str | None = None,
    routing: Routing | None = None,
) -> SolveReport:
    """Run one solver and score its final routing.

    Fixed-routing methods start from ``routing`` (default: the local-search
    routing of every package), built outside the timed region.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if instance_id is None:
        instance_id = f"seed{inst.seed}" if inst.seed is not None else "instance"
    pp = PenaltyParams.for_instance(inst, cfg.lam)
    if method in FIXED_ROUTING_METHODS and routing is None:
        routing = initial_routing(inst, cfg)
    start = time.perf_counter()
    try:
        R = _solve(method, inst, pp, cfg, routing)
    except (InfeasibleError, InfeasibleAssignmentError) as exc:
        elapsed = (time.perf_counter() - start) * 1e3
        nan = float("nan")
        return SolveReport(method, instance_id, cfg.seed, inst.total_quantity, nan, nan, False, nan,
                           round(elapsed, 3), None, str(exc))
    elapsed = (time.perf_counter() - start) * 1e3
    return SolveReport(
        method=method,
        instance_id=instance_id,
        seed=cfg.seed,
        oq=omitted_quantity(inst, R),
        cost=routing_cost(inst, R),
        emission=routing_emission(inst, R),
        admissible=is_admissible(inst, R),
        reward=terminal_reward(inst, pp, R),
        runtime_ms=round(elapsed, 3),
        routing=R,
    )


def load_instances(instance_dir: str | Path) -> list[tuple[str, Instance]]:
    out = []
    for path in sorted(Path(instance_dir).glob("*.json")):
        try:
            out.append((path.stem, Instance.load(path)))
        except (OSError, ValueError, KeyError) as exc:
            log.warning("skipping %s: %s", path, exc)
    return out


def _run_instance(args) -> list[SolveReport]:
    methods, iid, inst, cfg = args
    R0 = initial_routing(inst, cfg) if any(m in FIXED_ROUTING_METHODS for m in methods) else None
    return [run_method(m, inst, cfg, iid, R0) for m in methods]


def run_batch(
    methods: Sequence[str],
    instances: str | Path | Iterable[tuple[str, Instance]],
    cfg: BenchConfig = BenchConfig(),
    workers: int = 1,
) -> list[SolveReport]:
    """Every method on every instance; rows sorted by ``(method, instance_id)``.

    The fixed-routing methods of one instance share a single initial routing.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if isinstance(instances, (str, Path)):
        instances = load_instances(instances)
    jobs = [(tuple(methods), iid, inst, cfg) for iid, inst in instances]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_instance, jobs))
    else:
        chunks = [_run_instance(job) for job in jobs]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.method, r.instance_id))
    return rows


def summarize(rows: Sequence[SolveReport], reference: str = "dp") -> list[dict]:
    """Per-method means; relative reward is the per-instance difference to ``reference``."""
    ref = {r.instance_id: r.reward for r in rows if r.method == reference}
    out = []
    for method in sorted({r.method for r in rows}):
        mine = [r for r in rows if r.method == method]
        rewards = [r.reward for r in mine]
        rel = [r.reward - ref[r.instance_id] for r in mine if r.instance_id in ref]
        out.append({
            "method": method,
            "n": len(mine),
            "mean_reward": statistics.fmean(rewards),
            "median_reward": statistics.median(rewards),
            "mean_relative_reward": statistics.fmean(rel) if rel else float("nan"),
            "mean_runtime_ms": statistics.fmean(r.runtime_ms for r in mine),
            "admissible_rate": sum(r.admissible for r in mine) / len(mine),
        })
    return out


def emit_csv(rows: Sequence[SolveReport | dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow(r.row() if isinstance(r, SolveReport) else {k: r[k] for k in CSV_COLUMNS})


def write_summary_csv(summary: Sequence[dict], path: str | Path) -> None:
    if not summary:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0]))
        writer.writeheader()
        writer.writerows(summary)
