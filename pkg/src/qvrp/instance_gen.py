"""Synthetic benchmark instances and the two adversarial instance families.

All randomness flows through ``numpy.random.default_rng(seed)``; with a fixed
seed the generated instance (and its JSON serialization) is identical across
runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .model import Instance, Routing, Vehicle, is_admissible

# one electric, one hybrid, two diesel vehicles
DEFAULT_EMISSION_FACTORS = (0.0, 0.15, 0.3, 0.3)


@dataclass(frozen=True)
class GenConfig:
    d: int
    seed: int = 0
    plane_side: float = 12.0
    quota_override: float | None = None
    unit_quantities: bool = True
    emission_factors: tuple[float, ...] = DEFAULT_EMISSION_FACTORS
    cost_factor: float = 1.0
    cap_slack: int = 1
    # nominal per-vehicle capacity used to scale non-unit quantities
    nominal_cap: int | None = None
    literal_floor: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.plane_side <= 0:
            raise ValueError("plane_side must be positive")

    @property
    def quota(self) -> float:
        if self.quota_override is not None:
            return float(self.quota_override)
        return 10.0 if self.d == 20 else 20.0


def gen_quantities(
    cfg: GenConfig, cap_total: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Draw ``q = 1 + floor((cap_total - d) * X)`` with ``X ~ Dirichlet(1)``.

    ``X`` is redrawn whenever the total demand exceeds ``cap_total``.  With
    ``cfg.literal_floor`` the floor is applied to ``X`` itself, which yields
    all-ones demands almost surely.
    """
    d = cfg.d
    if cap_total < d:
        raise ValueError(f"total capacity {cap_total} cannot cover {d} unit demands")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    spare = cap_total - d
    while True:
        # Dirichlet(1_d) via normalized Gamma(1, 1) draws
        g = rng.standard_gamma(1.0, size=d)
        x = g / g.sum()
        if cfg.literal_floor:
            q = 1 + spare * np.floor(x).astype(np.int64)
        else:
            q = 1 + np.floor(spare * x).astype(np.int64)
        if q.sum() <= cap_total:
            return q


def first_fit_decreasing(q: Sequence[int], caps: Sequence[int]) -> list[int] | None:
    """Bin index per item (in input order), or None if FFD cannot pack."""
    order = sorted(range(len(q)), key=lambda i: (-q[i], i))
    room = list(caps)
    out = [-1] * len(q)
    for i in order:
        for b, r in enumerate(room):
            if q[i] <= r:
                room[b] -= q[i]
                out[i] = b
                break
        else:
            return None
    return out


def gen_synthetic(cfg: GenConfig) -> Instance:
    rng = np.random.default_rng(cfg.seed)
    d, m = cfg.d, len(cfg.emission_factors)
    pts = rng.uniform(0.0, cfg.plane_side, size=(d + 1, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(D, 0.0)

    if cfg.unit_quantities:
        q = np.ones(d, dtype=np.int64)
    else:
        nominal = cfg.nominal_cap or 2 * math.ceil(d / m)
        q = gen_quantities(cfg, nominal * m, rng)

    cap = max(math.ceil(q.sum() / m) + cfg.cap_slack, int(q.max()))
    # equal capacities must actually pack the demand
    while first_fit_decreasing(q.tolist(), [cap] * m) is None:
        cap += 1
    fleet = tuple(Vehicle(cap, ef, cfg.cost_factor) for ef in cfg.emission_factors)
    return Instance(D, q, fleet, cfg.quota, seed=cfg.seed)


def filter_nontrivial(
    inst: Instance, routing_fn: Callable[[Instance], Routing]
) -> bool:
    """True iff routing every package violates the quota (instance is kept)."""
    return not is_admissible(inst, routing_fn(inst))


def gen_batch(
    cfg: GenConfig,
    count: int,
    routing_fn: Callable[[Instance], Routing] | None = None,
    max_tries: int = 10_000,
) -> list[Instance]:
    """Generate ``count`` instances with consecutive seeds from ``cfg.seed``.

    When ``routing_fn`` is given, only quota-violating instances are kept.
    """
    out: list[Instance] = []
    seed = cfg.seed
    tries = 0
    while len(out) < count:
        if tries >= max_tries:
            raise RuntimeError(f"only {len(out)} nontrivial instances in {max_tries} draws")
        inst = gen_synthetic(replace(cfg, seed=seed))
        if routing_fn is None or filter_nontrivial(inst, routing_fn):
            out.append(inst)
        seed += 1
        tries += 1
    return out


# -- adversarial families ----------------------------------------------------


def gen_gap_instance(n: int) -> tuple[Instance, Routing]:
    """Instance where the fixed-routing optimum removes ``n/2`` destinations.

    Destination ``i`` sits at hub distance ``2**(i-1)`` so that its round trip
    has length ``2**i``; vehicle ``i`` has emission factor ``2**-i`` and
    capacity 1.  The star routing (vehicle ``i`` serves destination ``i``)
    then emits exactly 1 per route, ``n`` in total, against a quota ``n/2``.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    hub = np.array([2.0 ** (i - 1) for i in range(1, n + 1)])
    D = np.zeros((n + 1, n + 1))
    D[0, 1:] = hub
    D[1:, 0] = hub
    D[1:, 1:] = hub[:, None] + hub[None, :]
    np.fill_diagonal(D, 0.0)
    fleet = tuple(Vehicle(1, 2.0**-i, 1.0) for i in range(1, n + 1))
    inst = Instance(D, np.ones(n, dtype=np.int64), fleet, n / 2)
    star = Routing(tuple((0, i, 0) for i in range(1, n + 1)))
    return inst, star


def gap_alternative_routing(n: int) -> Routing:
    """Drop destination ``n`` and idle vehicle 1; vehicle ``i+1`` serves ``i``."""
    routes = [(0, 0)] + [(0, i, 0) for i in range(1, n)]
    return Routing(tuple(routes))


@dataclass
class KnapsackReduction:
    items: list[tuple[int, int]]
    C: int
    V: int
    inst: Instance
    routing: Routing
    solutions: dict[int, frozenset[int] | None] = field(default_factory=dict)

    def decide(self) -> bool:
        """Solve the fixed-routing problem for every removal budget ``k``."""
        from .shortcut import solve_shortcut_budget

        decision = False
        for k in range(len(self.items) + 1):
            res = solve_shortcut_budget(self.inst, self.routing, k)
            if res is None:
                self.solutions[k] = None
                continue
            removals, _ = res
            chosen = frozenset(v for v, _ in removals)
            self.solutions[k] = chosen
            if self.certifies(chosen):
                decision = True
        return decision

    def certifies(self, chosen: frozenset[int]) -> bool:
        cost = sum(self.items[i][0] for i in chosen)
        value = sum(self.items[i][1] for i in chosen)
        return cost <= self.C and value >= self.V


def gen_knapsack_reduction(items: Sequence[tuple[int, int]], C: int, V: int) -> KnapsackReduction:
    """Encode a knapsack decision instance as single-destination routes.

    Item ``i`` (cost ``c_i``, value ``v_i``) becomes a round trip of length
    ``v_i`` on a vehicle with emission factor 1 and cost factor
    ``(B - c_i) / (2 v_i)``; removing a set of routes meets the quota
    ``sum(v) - V`` iff the removed values reach ``V``.
    """
    items = [(int(c), int(v)) for c, v in items]
    if any(c < 1 or v < 1 for c, v in items):
        raise ValueError("knapsack costs and values must be positive integers")
    n = len(items)
    B = max(c for c, _ in items)
    half = np.array([v / 2 for _, v in items])
    D = np.zeros((n + 1, n + 1))
    D[0, 1:] = half
    D[1:, 0] = half
    D[1:, 1:] = half[:, None] + half[None, :]
    np.fill_diagonal(D, 0.0)
    fleet = tuple(Vehicle(1, 1.0, (B - c) / (2 * v)) for c, v in items)
    quota = max(0, sum(v for _, v in items) - V)
    inst = Instance(D, np.ones(n, dtype=np.int64), fleet, quota)
    routing = Routing(tuple((0, i, 0) for i in range(1, n + 1)))
    return KnapsackReduction(items, C, V, inst, routing)


def brute_force_knapsack(items: Sequence[tuple[int, int]], C: int, V: int) -> bool:
    n = len(items)
    for mask in range(1 << n):
        cost = value = 0
        for i in range(n):
            if mask >> i & 1:
                cost += items[i][0]
                value += items[i][1]
        if cost <= C and value >= V:
            return True
    return False
