import math

import numpy as np
import pytest

from conftest import FAST_LS
from qvrp.anneal import SaConfig, oa_sa, va_sa
from qvrp.instance_gen import GenConfig, gen_synthetic
from qvrp.model import (
    OMIT,
    Instance,
    PenaltyParams,
    Vehicle,
    check_routing,
    is_admissible,
    omitted_quantity,
    penalized_objective_g,
    terminal_reward,
)
from qvrp.routing import solve_vrp_local_search
from qvrp.shortcut import greedy_removal

QUICK = SaConfig(tau_init=50.0, tau_limit=1.0, cooling=0.95, routing_budget=300)


def small(seed=0, d=6, quota=None):
    inst = gen_synthetic(GenConfig(d=d, seed=seed))
    return inst if quota is None else inst.with_quota(quota)


def test_schedule_length_and_values():
    cfg = SaConfig()
    assert cfg.n_levels == math.ceil(math.log(1 / 5000) / math.log(0.995)) == 1700
    taus = cfg.temperatures()
    assert len(taus) == cfg.n_levels
    assert taus[0] == 5000 and taus[-1] > 1 and taus[-1] * 0.995 <= 1
    assert all(t == 5000 * 0.995**i for i, t in enumerate(taus))


@pytest.mark.parametrize("bad", [dict(cooling=1.0), dict(cooling=0.0), dict(tau_limit=6000.0), dict(steps_per_temperature=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SaConfig(**bad)


def test_oa_sa_huge_quota_keeps_all():
    inst = small(quota=1e9)
    res = oa_sa(inst, PenaltyParams.for_instance(inst), QUICK)
    assert res.assignment == (True,) * inst.d
    assert omitted_quantity(inst, res.routing) == 0
    assert res.admissible


def test_oa_sa_zero_quota_keeps_none():
    inst = small(d=4, quota=0.0)
    inst = Instance(inst.D, inst.q, tuple(Vehicle(v.cap, 0.2) for v in inst.fleet), 0.0)
    res = oa_sa(inst, PenaltyParams.for_instance(inst), SaConfig(routing_budget=200))
    assert res.assignment == (False,) * 4
    assert res.admissible


def test_va_sa_single_vehicle_huge_quota_serves_all():
    inst = small(d=5, quota=1e9)
    inst = Instance(inst.D, inst.q, (Vehicle(5, 0.3),), 1e9)
    res = va_sa(inst, PenaltyParams.for_instance(inst), QUICK)
    assert OMIT not in res.assignment
    assert omitted_quantity(inst, res.routing) == 0


@pytest.mark.parametrize("solver", [oa_sa, va_sa])
def test_fixed_seed_is_bit_identical(solver):
    inst = small(seed=3, d=8, quota=2.0)
    pp = PenaltyParams.for_instance(inst)
    a, b = solver(inst, pp, QUICK), solver(inst, pp, QUICK)
    assert a.assignment == b.assignment and a.routing == b.routing and a.g == b.g
    assert a.trace == b.trace


@pytest.mark.parametrize("solver", [oa_sa, va_sa])
def test_improving_moves_always_accepted(solver):
    inst = small(seed=5, d=8, quota=2.0)
    res = solver(inst, PenaltyParams.for_instance(inst), QUICK)
    improving = [s for s in res.trace if s.g_candidate < s.g_current]
    assert improving
    assert all(s.accepted for s in improving)
    assert len(res.trace) == QUICK.n_levels
    # temperatures follow the geometric schedule step by step
    assert [s.tau for s in res.trace] == QUICK.temperatures()


@pytest.mark.parametrize("solver", [oa_sa, va_sa])
def test_returns_best_visited(solver):
    inst = small(seed=6, d=8, quota=2.0)
    pp = PenaltyParams.for_instance(inst)
    res = solver(inst, pp, QUICK)
    visited = [res.trace[0].g_current] + [s.g_candidate for s in res.trace if s.accepted]
    assert res.g == penalized_objective_g(inst, pp, res.routing)
    if res.admissible:
        assert is_admissible(inst, res.routing)
    else:
        assert res.g == min(visited)


def test_va_sa_routing_respects_assignment():
    inst = small(seed=2, d=10, quota=2.0)
    res = va_sa(inst, PenaltyParams.for_instance(inst), QUICK)
    check_routing(inst, res.routing)
    for v, r in enumerate(res.routing.routes):
        assert all(res.assignment[x - 1] == v for x in r[1:-1])


def test_oa_sa_routing_serves_kept():
    inst = small(seed=2, d=10, quota=2.0)
    res = oa_sa(inst, PenaltyParams.for_instance(inst), QUICK)
    check_routing(inst, res.routing)
    assert res.routing.served() == {i + 1 for i, k in enumerate(res.assignment) if k}


@pytest.mark.parametrize("backend", ["nn", "local_search"])
def test_backends_are_switchable(backend):
    inst = small(seed=4, d=8, quota=2.0)
    pp = PenaltyParams.for_instance(inst)
    cfg = SaConfig(tau_init=20.0, cooling=0.9, routing_budget=200, backend=backend)
    for solver in (oa_sa, va_sa):
        res = solver(inst, pp, cfg)
        check_routing(inst, res.routing)


def test_va_sa_beats_greedy_on_most_small_instances():
    wins = total = 0
    seed = 0
    while total < 20:
        inst = gen_synthetic(GenConfig(d=8, seed=seed, quota_override=3.0))
        seed += 1
        pp = PenaltyParams.for_instance(inst)
        R0 = solve_vrp_local_search(inst, [True] * 8, pp, FAST_LS)
        if is_admissible(inst, R0):
            continue
        total += 1
        _, G = greedy_removal(inst, R0, pp)
        res = va_sa(inst, pp, SaConfig(seed=seed))
        wins += terminal_reward(inst, pp, res.routing) >= terminal_reward(inst, pp, G)
    assert wins > total / 2
