"""Simulated annealing over omission assignments and vehicle assignments.

Both variants score a state by the penalized objective ``g`` of the routing
the routing layer builds for it, cool geometrically from ``tau_init`` to
``tau_limit`` and return the best admissible state visited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    OMIT,
    Instance,
    InfeasibleAssignmentError,
    PenaltyParams,
    Routing,
    is_admissible,
    penalized_objective_g,
)
from .routing import (
    LocalSearchConfig,
    _GuidedSearch,
    initial_solution,
    nn_sweep_assignment,
    route_for_vehicle_assignment,
    solve_vrp_local_search,
)


@dataclass(frozen=True)
class SaConfig:
    tau_init: float = 5000.0
    tau_limit: float = 1.0
    cooling: float = 0.995
    seed: int = 0
    steps_per_temperature: int = 1
    # move-evaluation budget for each local-search call
    routing_budget: int = 2000
    # "local_search" or "nn"; None picks local_search for OA-SA, nn for VA-SA
    backend: str | None = None

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0, 1)")
        if not 0 < self.tau_limit < self.tau_init:
            raise ValueError("need 0 < tau_limit < tau_init")
        if self.steps_per_temperature < 1:
            raise ValueError("steps_per_temperature must be >= 1")

    @property
    def n_levels(self) -> int:
        return math.ceil(math.log(self.tau_limit / self.tau_init) / math.log(self.cooling))

    def temperatures(self) -> list[float]:
        return [self.tau_init * self.cooling**t for t in range(self.n_levels)]


@dataclass(frozen=True)
class StepRecord:
    step: int
    tau: float
    g_current: float
    g_candidate: float
    accepted: bool


@dataclass
class AnnealResult:
    assignment: tuple
    routing: Routing
    g: float
    admissible: bool
    trace: list[StepRecord] = field(default_factory=list, repr=False)


def _anneal(inst, pp, cfg, init, neighbor, route):
    rng = np.random.default_rng(cfg.seed)
    cache: dict[tuple, tuple[Routing | None, float]] = {}

    def evaluate(state):
        if state not in cache:
            try:
                R = route(state)
            except InfeasibleAssignmentError:
                cache[state] = (None, math.inf)
            else:
                cache[state] = (R, penalized_objective_g(inst, pp, R))
        return cache[state]

    state = init
    R, g = evaluate(state)
    if R is None:
        raise InfeasibleAssignmentError("initial state cannot be routed")
    best = ((not is_admissible(inst, R), g), state, R, g)
    trace = []
    step = 0
    for tau in cfg.temperatures():
        for _ in range(cfg.steps_per_temperature):
            cand = neighbor(state, rng)
            R2, g2 = evaluate(cand)
            accepted = g2 < g or rng.random() < math.exp(-(g2 - g) / tau)
            trace.append(StepRecord(step, tau, g, g2, accepted))
            step += 1
            if accepted:
                state, g = cand, g2
                key = (not is_admissible(inst, R2), g2)
                if key < best[0]:
                    best = (key, cand, R2, g2)
    (inadmissible, _), state, R, g = best
    return AnnealResult(state, R, g, not inadmissible, trace)


def oa_sa(inst: Instance, pp: PenaltyParams, cfg: SaConfig = SaConfig()) -> AnnealResult:
    """Anneal over keep/omit vectors; a move flips one random package."""
    backend = cfg.backend or "local_search"
    ls_cfg = LocalSearchConfig(max_evaluations=cfg.routing_budget)

    def route(keep):
        if backend == "nn":
            return initial_solution(inst, [i + 1 for i, k in enumerate(keep) if k], pp)
        return solve_vrp_local_search(inst, keep, pp, ls_cfg)

    def neighbor(keep, rng):
        i = int(rng.integers(inst.d))
        return keep[:i] + (not keep[i],) + keep[i + 1 :]

    return _anneal(inst, pp, cfg, (True,) * inst.d, neighbor, route)


def va_sa(inst: Instance, pp: PenaltyParams, cfg: SaConfig = SaConfig()) -> AnnealResult:
    """Anneal over vehicle assignments; a move reassigns one random package.

    The new value is drawn uniformly among the other options in
    ``{omit} + fleet``.  Packages the nearest-neighbor router cannot fit
    count as omitted.
    """
    backend = cfg.backend or "nn"
    m = inst.n_vehicles
    intra = LocalSearchConfig(max_evaluations=cfg.routing_budget, neighborhoods=("relocate", "two_opt"))

    def route(a):
        R = route_for_vehicle_assignment(inst, a, pp)
        if backend == "local_search" and R.served():
            R = _GuidedSearch(inst, R, pp, intra).run()
        return R

    def neighbor(a, rng):
        i = int(rng.integers(inst.d))
        # options are OMIT, 0..m-1; pick one of the m values different from a[i]
        pick = int(rng.integers(m))
        new = pick - 1 if pick - 1 < a[i] else pick
        return a[:i] + (new,) + a[i + 1 :]

    init = tuple(nn_sweep_assignment(inst, pp))
    return _anneal(inst, pp, cfg, init, neighbor, route)


__all__ = ["SaConfig", "StepRecord", "AnnealResult", "oa_sa", "va_sa", "OMIT"]
