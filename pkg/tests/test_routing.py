import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FAST_LS, random_instance, random_routing
from oracles import tsp_brute_force
from qvrp.instance_gen import GenConfig, gen_synthetic
from qvrp.model import (
    OMIT,
    InfeasibleAssignmentError,
    Instance,
    PenaltyParams,
    Routing,
    Vehicle,
    check_routing,
    omitted_quantity,
    route_length,
    routing_emission,
)
from qvrp.routing import (
    LocalSearchConfig,
    nearest_neighbor_route,
    penalized_length,
    remove_destination,
    route_for_vehicle_assignment,
    solve_vrp_local_search,
)
from qvrp.shortcut import delta


def line(n, cap=10):
    """Destinations 1..n on a ray at distances 1..n from the hub."""
    x = np.arange(n + 1, dtype=float)
    D = np.abs(x[:, None] - x[None, :])
    return Instance(D, np.ones(n, dtype=int), (Vehicle(cap, 0.3),), 100.0)


# -- nearest neighbor ---------------------------------------------------------


def test_nn_empty_targets():
    inst = line(3)
    pp = PenaltyParams.for_instance(inst)
    assert nearest_neighbor_route(inst, 0, [], pp) == ((0, 0), [])


def test_nn_single_target():
    inst = line(3)
    pp = PenaltyParams.for_instance(inst)
    assert nearest_neighbor_route(inst, 0, {3}, pp) == ((0, 3, 0), [])


def test_nn_on_a_line_visits_nearest_first():
    inst = line(3)
    pp = PenaltyParams.for_instance(inst)
    route, skipped = nearest_neighbor_route(inst, 0, {3, 1, 2}, pp)
    assert route == (0, 1, 2, 3, 0) and skipped == []
    # the nearest-first order is also one of the shortest of all six orders
    assert route_length(inst.D, route) == tsp_brute_force(inst.D, (1, 2, 3))[0]


def test_nn_skips_what_does_not_fit():
    D = line(3).D
    inst = Instance(D, [1, 3, 1], (Vehicle(3, 0.3),), 100.0)
    pp = PenaltyParams.for_instance(inst)
    route, skipped = nearest_neighbor_route(inst, 0, {1, 2, 3}, pp)
    # after 1 (load 1) destination 2 needs 3 > 2 remaining, so 3 comes next
    assert route == (0, 1, 3, 0)
    assert skipped == [2]


def test_nn_ties_go_to_lowest_index():
    D = np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]], dtype=float)
    inst = Instance(D, [1, 1], (Vehicle(2, 0.1),), 1.0)
    route, _ = nearest_neighbor_route(inst, 0, {2, 1}, PenaltyParams.for_instance(inst))
    assert route == (0, 1, 2, 0)


# -- vehicle assignments --------------------------------------------------------


def test_vehicle_assignment_all_omitted():
    inst = random_instance(0, 5)
    R = route_for_vehicle_assignment(inst, [OMIT] * 5, PenaltyParams.for_instance(inst))
    assert R == Routing.empty(2)
    assert omitted_quantity(inst, R) == inst.total_quantity


def test_vehicle_assignment_one_each():
    inst = random_instance(1, 2)
    R = route_for_vehicle_assignment(inst, [1, 0], PenaltyParams.for_instance(inst))
    assert R.routes == ((0, 2, 0), (0, 1, 0))


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.sampled_from(["skip", "drop_highest"]))
def test_vehicle_assignment_is_respected(seed, overflow):
    rng = np.random.default_rng(seed)
    inst = random_instance(seed, 8, types=2, unit=False, vehicles_per_type=1)
    a = [int(x) for x in rng.integers(-1, inst.n_vehicles, size=8)]
    R = route_for_vehicle_assignment(inst, a, PenaltyParams.for_instance(inst), overflow)
    check_routing(inst, R)
    for v, r in enumerate(R.routes):
        assert all(a[x - 1] == v for x in r[1:-1])


def test_drop_highest_removes_high_indices():
    D = line(4).D
    inst = Instance(D, [1, 1, 1, 1], (Vehicle(2, 0.3),), 100.0)
    R = route_for_vehicle_assignment(inst, [0, 0, 0, 0], PenaltyParams.for_instance(inst), "drop_highest")
    assert R.served() == {1, 2}


def test_vehicle_assignment_bad_overflow():
    inst = line(2)
    with pytest.raises(ValueError):
        route_for_vehicle_assignment(inst, [0, 0], PenaltyParams.for_instance(inst), "bounce")


# -- omission assignments: local search -------------------------------------------


def test_local_search_keep_none():
    inst = random_instance(2, 5)
    pp = PenaltyParams.for_instance(inst)
    R = solve_vrp_local_search(inst, [False] * 5, pp, FAST_LS)
    assert R == Routing.empty(2)
    assert penalized_length(inst, R, pp.lam) == 0


def test_local_search_finds_square_tour(square4):
    pp = PenaltyParams.for_instance(square4)
    R = solve_vrp_local_search(square4, [True] * 4, pp, FAST_LS)
    best, _ = tsp_brute_force(square4.D, (1, 2, 3, 4))
    assert route_length(square4.D, R.routes[0]) == pytest.approx(best, abs=1e-12)
    # the perimeter plus two hub legs
    assert best == pytest.approx(2 * np.sqrt(2) + 6)


@pytest.mark.parametrize("seed", range(8))
def test_local_search_single_vehicle_d5_is_optimal(seed):
    inst = random_instance(seed, 5, types=1)
    inst = Instance(inst.D, inst.q, (Vehicle(5, 0.2),), 0.0)
    R = solve_vrp_local_search(inst, [True] * 5, PenaltyParams.for_instance(inst), FAST_LS)
    best, _ = tsp_brute_force(inst.D, range(1, 6))
    assert route_length(inst.D, R.routes[0]) == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_emission_penalty_steers_to_clean_vehicle(seed):
    base = gen_synthetic(GenConfig(d=8, seed=seed))
    fleet = (Vehicle(5, 0.0), Vehicle(5, 0.3))
    inst = Instance(base.D, base.q, fleet, 1.0)
    keep = [True] * 8
    green = solve_vrp_local_search(inst, keep, PenaltyParams.for_instance(inst, 10_000.0), FAST_LS)
    plain = solve_vrp_local_search(inst, keep, PenaltyParams.for_instance(inst, 0.0), FAST_LS)
    assert routing_emission(inst, green) <= routing_emission(inst, plain) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.booleans(), min_size=10, max_size=10))
def test_local_search_serves_exactly_kept(seed, keep):
    inst = gen_synthetic(GenConfig(d=10, seed=seed, unit_quantities=False))
    R = solve_vrp_local_search(inst, keep, PenaltyParams.for_instance(inst), LocalSearchConfig(max_evaluations=3000))
    check_routing(inst, R)
    assert R.served() == {i + 1 for i, k in enumerate(keep) if k}


def test_local_search_descent_is_monotone():
    inst = gen_synthetic(GenConfig(d=15, seed=4))
    pp = PenaltyParams.for_instance(inst)
    trace = []
    R = solve_vrp_local_search(inst, [True] * 15, pp, LocalSearchConfig(max_evaluations=50_000), trace)
    segment = []
    optima = []
    for kind, val in trace:
        if kind == "move":
            segment.append(val)
        else:
            assert all(b < a for a, b in zip(segment, segment[1:]))
            segment = []
            optima.append(val)
    assert optima
    # the returned routing is at least as good as every local optimum visited
    assert penalized_length(inst, R, pp.lam) <= min(optima) + 1e-9


def test_local_search_deterministic():
    inst = gen_synthetic(GenConfig(d=12, seed=9))
    pp = PenaltyParams.for_instance(inst)
    runs = [solve_vrp_local_search(inst, [True] * 12, pp, LocalSearchConfig(max_evaluations=20_000)) for _ in range(2)]
    assert runs[0] == runs[1]


def test_local_search_more_budget_no_worse():
    inst = gen_synthetic(GenConfig(d=20, seed=1))
    pp = PenaltyParams.for_instance(inst)
    vals = [
        penalized_length(inst, solve_vrp_local_search(inst, [True] * 20, pp, LocalSearchConfig(max_evaluations=b)), pp.lam)
        for b in (1_000, 100_000)
    ]
    assert vals[1] <= vals[0] + 1e-9


def test_local_search_infeasible_keep():
    D = line(3).D
    inst = Instance(D, [2, 2, 2], (Vehicle(3, 0.1), Vehicle(3, 0.1)), 1.0)
    with pytest.raises(InfeasibleAssignmentError):
        solve_vrp_local_search(inst, [True] * 3, PenaltyParams.for_instance(inst), FAST_LS)


def test_local_search_config_validation():
    with pytest.raises(ValueError):
        LocalSearchConfig(max_evaluations=0)
    with pytest.raises(ValueError):
        LocalSearchConfig(neighborhoods=("or_opt",))


@pytest.mark.parametrize("hood", ["relocate", "swap", "two_opt", "cross_relocate"])
def test_each_neighborhood_alone_is_valid(hood):
    inst = gen_synthetic(GenConfig(d=10, seed=3))
    cfg = LocalSearchConfig(max_evaluations=5_000, neighborhoods=(hood,))
    R = solve_vrp_local_search(inst, [True] * 10, PenaltyParams.for_instance(inst), cfg)
    check_routing(inst, R)
    assert R.served() == set(range(1, 11))


# -- remove_destination ---------------------------------------------------------


def test_remove_only_destination():
    R = Routing.from_stops([[3], [1, 2]])
    assert remove_destination(R, 3).routes == ((0, 0), (0, 1, 2, 0))


def test_remove_links_neighbors():
    R = Routing.from_stops([[1, 2]])
    assert remove_destination(R, 1).routes == ((0, 2, 0),)


def test_remove_absent_warns():
    R = Routing.from_stops([[1]])
    with pytest.warns(RuntimeWarning):
        assert remove_destination(R, 2) == R


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.data())
def test_remove_saves_delta(seed, data):
    inst = random_instance(seed, 7)
    R = random_routing(inst, np.random.default_rng(seed))
    i = data.draw(st.sampled_from(sorted(R.served())))
    v = R.vehicle_of(i)
    j = R.routes[v].index(i)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        S = remove_destination(R, i)
    saved = route_length(inst.D, R.routes[v]) - route_length(inst.D, S.routes[v])
    assert saved == pytest.approx(delta(inst, R, v, j + 1, 1), abs=1e-9)
    assert [r for u, r in enumerate(S.routes) if u != v] == [r for u, r in enumerate(R.routes) if u != v]
