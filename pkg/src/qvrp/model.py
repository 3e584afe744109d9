"""Core domain types and objective functions for quota-constrained routing.

Destinations are numbered ``1..d``; index ``0`` is the hub.  Quantities are
stored per destination (``q[i - 1]`` is the demand of destination ``i``),
while :attr:`Instance.qty` offers a hub-padded view indexable by node id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_LAMBDA = 10000.0
OMIT = -1


class InfeasibleError(ValueError):
    """No admissible solution exists (only possible with a negative quota)."""


class InfeasibleAssignmentError(ValueError):
    """Kept demand cannot be packed into the fleet."""


class InvalidRoutingError(ValueError):
    pass


@dataclass(frozen=True)
class Vehicle:
    cap: int
    ef: float
    cf: float = 1.0

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError(f"capacity must be >= 1, got {self.cap}")
        if self.ef < 0 or self.cf < 0:
            raise ValueError("emission and cost factors must be nonnegative")


@dataclass(frozen=True, eq=False)
class Instance:
    D: np.ndarray
    q: np.ndarray
    fleet: tuple[Vehicle, ...]
    quota: float
    seed: int | None = None

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        q = np.array(self.q, dtype=np.int64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("distance matrix must be square")
        if D.shape[0] != q.shape[0] + 1:
            raise ValueError("distance matrix side must be d + 1")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.diag(D) != 0):
            raise ValueError("D[i][i] must be 0")
        if np.any(q < 1):
            raise ValueError("quantities must be >= 1")
        if not self.fleet:
            raise ValueError("fleet must be nonempty")
        if self.quota < 0:
            raise ValueError("quota must be nonnegative")
        D.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "fleet", tuple(self.fleet))
        object.__setattr__(self, "quota", float(self.quota))

    @property
    def d(self) -> int:
        return int(self.q.shape[0])

    @property
    def n_vehicles(self) -> int:
        return len(self.fleet)

    @cached_property
    def qty(self) -> np.ndarray:
        """Quantities indexed by node id, with ``qty[0] == 0`` for the hub."""
        out = np.concatenate([[0], self.q])
        out.setflags(write=False)
        return out

    @property
    def total_quantity(self) -> int:
        return int(self.q.sum())

    def penalized_matrix(self, v: int, lam: float) -> np.ndarray:
        """Per-vehicle matrix ``(cf_v + lam * ef_v) * D``."""
        veh = self.fleet[v]
        return (veh.cf + lam * veh.ef) * self.D

    @cached_property
    def _rows_cache(self) -> dict:
        return {}

    def penalized_rows(self, v: int, lam: float) -> list[list[float]]:
        """:meth:`penalized_matrix` as nested lists, cached for hot loops."""
        key = (v, lam)
        if key not in self._rows_cache:
            self._rows_cache[key] = self.penalized_matrix(v, lam).tolist()
        return self._rows_cache[key]

    def with_quota(self, quota: float) -> Instance:
        return Instance(self.D, self.q, self.fleet, quota, self.seed)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "distance": self.D.tolist(),
            "quantity": [int(x) for x in self.q],
            "fleet": [{"cap": v.cap, "ef": v.ef, "cf": v.cf} for v in self.fleet],
            "quota": self.quota,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Instance:
        inst = cls(
            D=data["distance"],
            q=data["quantity"],
            fleet=tuple(Vehicle(int(v["cap"]), float(v["ef"]), float(v["cf"])) for v in data["fleet"]),
            quota=data["quota"],
            seed=data.get("seed"),
        )
        if inst.d != data["d"]:
            raise ValueError(f"'d' is {data['d']} but quantity has {inst.d} entries")
        return inst

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> Instance:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class PenaltyParams:
    lam: float
    P: float

    @classmethod
    def for_instance(cls, inst: Instance, lam: float = DEFAULT_LAMBDA) -> PenaltyParams:
        """Omission penalty fixed at twice the largest hub distance."""
        P = 2.0 * float(inst.D[0, 1:].max()) if inst.d else 0.0
        return cls(lam=lam, P=P)


Route = tuple[int, ...]
EMPTY_ROUTE: Route = (0, 0)


@dataclass(frozen=True)
class Routing:
    routes: tuple[Route, ...]

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(int(x) for x in r) for r in self.routes))

    @classmethod
    def empty(cls, n_vehicles: int) -> Routing:
        return cls((EMPTY_ROUTE,) * n_vehicles)

    @classmethod
    def from_stops(cls, stops: Sequence[Sequence[int]]) -> Routing:
        """Build from interior stop lists (hubs added)."""
        return cls(tuple((0, *s, 0) for s in stops))

    def served(self) -> set[int]:
        return {x for r in self.routes for x in r[1:-1]}

    def vehicle_of(self, i: int) -> int | None:
        for v, r in enumerate(self.routes):
            if i in r[1:-1]:
                return v
        return None

    def to_dict(self) -> dict:
        return {"routes": [list(r) for r in self.routes]}

    @classmethod
    def from_dict(cls, data: dict) -> Routing:
        return cls(tuple(tuple(r) for r in data["routes"]))


# -- metrics -------------------------------------------------------------


def route_length(D: np.ndarray, r: Sequence[int]) -> float:
    n = D.shape[0]
    for x in r:
        if not 0 <= x < n:
            raise IndexError(f"stop {x} out of range for matrix of side {n}")
    r = np.asarray(r)
    return float(D[r[:-1], r[1:]].sum())


def route_load(q: Sequence[int], r: Sequence[int]) -> int:
    """Load of a route; ``q`` is per destination (``q[i - 1]`` for stop ``i``)."""
    return int(sum(q[x - 1] for x in r[1:-1]))


def _aligned(inst: Instance, R: Routing) -> None:
    if len(R.routes) != inst.n_vehicles:
        raise InvalidRoutingError(f"routing has {len(R.routes)} routes for {inst.n_vehicles} vehicles")


def route_lengths(inst: Instance, R: Routing) -> list[float]:
    _aligned(inst, R)
    return [route_length(inst.D, r) for r in R.routes]


def routing_cost(inst: Instance, R: Routing) -> float:
    return float(sum(v.cf * L for v, L in zip(inst.fleet, route_lengths(inst, R))))


def routing_emission(inst: Instance, R: Routing) -> float:
    return float(sum(v.ef * L for v, L in zip(inst.fleet, route_lengths(inst, R))))


def omitted_quantity(inst: Instance, R: Routing) -> int:
    served = R.served()
    return int(sum(inst.q[i - 1] for i in range(1, inst.d + 1) if i not in served))


def loss_lp(inst: Instance, pp: PenaltyParams, R: Routing) -> float:
    return omitted_quantity(inst, R) * pp.P + routing_cost(inst, R)


def excess_emission(inst: Instance, R: Routing) -> float:
    return max(0.0, routing_emission(inst, R) - inst.quota)


def penalized_objective_g(inst: Instance, pp: PenaltyParams, R: Routing) -> float:
    return loss_lp(inst, pp, R) + pp.lam * excess_emission(inst, R)


def is_admissible(inst: Instance, R: Routing) -> bool:
    return routing_emission(inst, R) <= inst.quota


def terminal_reward(inst: Instance, pp: PenaltyParams, R: Routing) -> float:
    """Relative gain of ``R`` over omitting every package."""
    worst = pp.P * inst.total_quantity
    return (worst - loss_lp(inst, pp, R)) / worst


def check_routing(inst: Instance, R: Routing) -> None:
    """Raise :class:`InvalidRoutingError` unless ``R`` is a valid routing."""
    _aligned(inst, R)
    seen: set[int] = set()
    for v, (veh, r) in enumerate(zip(inst.fleet, R.routes)):
        if len(r) < 2 or r[0] != 0 or r[-1] != 0:
            raise InvalidRoutingError(f"route {v} must start and end at the hub: {r}")
        for x in r[1:-1]:
            if not 1 <= x <= inst.d:
                raise InvalidRoutingError(f"route {v} visits invalid destination {x}")
            if x in seen:
                raise InvalidRoutingError(f"destination {x} appears twice")
            seen.add(x)
        if route_load(inst.q, r) > veh.cap:
            raise InvalidRoutingError(f"route {v} exceeds capacity {veh.cap}")


def subrouting(R: Routing, removed: Iterable[int]) -> Routing:
    """Drop the given destinations from every route."""
    removed = set(removed)
    return Routing(tuple((0, *(x for x in r[1:-1] if x not in removed), 0) for r in R.routes))
