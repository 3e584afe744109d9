import numpy as np
import pytest

from qvrp.model import Instance, PenaltyParams, Routing, Vehicle
from qvrp.routing import LocalSearchConfig

FAST_LS = LocalSearchConfig(max_evaluations=20_000)


def random_instance(seed, d, types=2, unit=True, vehicles_per_type=1):
    """Euclidean instance with ``types`` distinct (ef, cf) groups and quota 0."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 12, size=(d + 1, 2))
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    q = np.ones(d, dtype=int) if unit else rng.integers(1, 4, size=d)
    efs = [0.1, 0.3, 0.0, 0.2][:types]
    cfs = [1.0, 0.5, 2.0, 1.5][:types]
    m = types * vehicles_per_type
    cap = int(max(q.max(), -(-q.sum() // m) + 1))
    fleet = tuple(Vehicle(cap, efs[t], cfs[t]) for t in range(types) for _ in range(vehicles_per_type))
    return Instance(D, q, fleet, 0.0, seed=seed)


def random_routing(inst, rng):
    """Split a random permutation of all destinations over the fleet, respecting capacity."""
    order = rng.permutation(np.arange(1, inst.d + 1))
    stops = [[] for _ in inst.fleet]
    loads = [0] * len(inst.fleet)
    for x in order:
        for v in rng.permutation(len(inst.fleet)):
            if loads[v] + inst.qty[x] <= inst.fleet[v].cap:
                stops[v].append(int(x))
                loads[v] += int(inst.qty[x])
                break
    return Routing.from_stops(stops)


@pytest.fixture
def square4():
    """Four destinations on the corners of a 2x2 square centred on the hub."""
    pts = np.array([[0, 0], [1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return Instance(D, np.ones(4, dtype=int), (Vehicle(4, 0.3, 1.0),), 100.0)
