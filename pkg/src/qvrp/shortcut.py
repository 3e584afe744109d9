"""Removing destinations from a fixed routing to meet the emission quota.

Positions are addressed as ``(v, j)``: route ``v`` of the routing, index
``j`` into that route (``0`` and ``last_v`` are the hub).

The dynamic program works on a group of routes sharing the same emission
and cost factors.  ``val[r][j, k]`` is the smallest total group length
reachable by removing destinations of total quantity at most ``k`` from
routes ``< r`` and from route ``r`` strictly before position ``j``, with
position ``j`` kept.  Removals are consecutive blocks ending right before a
kept anchor, so any subset of destinations is reachable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import (
    Instance,
    InfeasibleError,
    PenaltyParams,
    Routing,
    is_admissible,
    routing_cost,
    routing_emission,
)

RemovalSet = frozenset  # of (vehicle, position) pairs


def _check_block(route: Sequence[int], j: int, s: int) -> None:
    if not 1 <= j <= len(route) - 1:
        raise IndexError(f"position {j} is not a valid anchor in a route of {len(route)} stops")
    if not 0 <= s <= j - 1:
        raise IndexError(f"cannot remove {s} destinations before position {j}")


def delta(inst: Instance, R: Routing, v: int, j: int, s: int) -> float:
    """Distance saved by removing the ``s`` destinations right before ``R[v][j]``."""
    r = R.routes[v]
    _check_block(r, j, s)
    D = inst.D
    path = sum(D[r[j - t - 1], r[j - t]] for t in range(s + 1))
    return float(path - D[r[j - s - 1], r[j]])


def oq_removed(inst: Instance, R: Routing, v: int, j: int, s: int) -> int:
    """Quantity of the ``s`` destinations at positions ``j-s .. j-1``."""
    r = R.routes[v]
    _check_block(r, j, s)
    return int(sum(inst.qty[r[t]] for t in range(j - s, j)))


@dataclass
class DpTable:
    vehicles: tuple[int, ...]
    routes: tuple[tuple[int, ...], ...]
    k_max: int
    val: list[np.ndarray]
    choice: list[np.ndarray]
    _qprefix: list[np.ndarray]

    @property
    def final(self) -> np.ndarray:
        """Best group length for each removed-quantity budget ``0..k_max``."""
        return self.val[-1][-1]

    def reconstruct(self, k: int) -> RemovalSet:
        """Removal pairs ``(vehicle, position)`` achieving ``final[k]``."""
        k = min(k, self.k_max)
        pairs = []
        r = len(self.routes) - 1
        j = len(self.routes[r]) - 1
        while r >= 0:
            if j == 0:
                r -= 1
                if r >= 0:
                    j = len(self.routes[r]) - 1
                continue
            s = int(self.choice[r][j, k])
            v = self.vehicles[r]
            pairs.extend((v, t) for t in range(j - s, j))
            pre = self._qprefix[r]
            k -= int(pre[j] - pre[j - s])
            j -= s + 1
        return frozenset(pairs)


def dp_fill(
    inst: Instance,
    R: Routing,
    k_max: int,
    vehicles: Sequence[int] | None = None,
    D: np.ndarray | None = None,
) -> DpTable:
    """Fill the removal table for the routes of ``vehicles`` (default: all).

    Lengths are measured with ``D`` (default: the instance distances).
    Work is ``O(k_max * d^2)``, vectorized over ``k``.
    """
    if vehicles is None:
        vehicles = tuple(range(len(R.routes)))
    vehicles = tuple(vehicles)
    D = inst.D if D is None else D
    qty = inst.qty
    routes = tuple(R.routes[v] for v in vehicles)
    seen = [x for r in routes for x in r[1:-1]]
    if len(seen) != len(set(seen)):
        raise ValueError("a destination appears more than once in the routing")
    K = int(k_max)
    total = sum(float(D[np.asarray(r[:-1]), np.asarray(r[1:])].sum()) for r in routes)

    vals, choices, qprefix = [], [], []
    prev_end = np.full(K + 1, total)
    for r in routes:
        m = len(r)
        arc = np.array([D[r[t], r[t + 1]] for t in range(m - 1)])
        # dpre[j] = length of the route prefix up to position j
        dpre = np.concatenate([[0.0], np.cumsum(arc)])
        qpre = np.concatenate([[0], np.cumsum([qty[x] for x in r])]).astype(np.int64)
        # qpre[j] = quantity of positions 0..j-1
        val = np.empty((m, K + 1))
        ch = np.zeros((m, K + 1), dtype=np.int32)
        val[0] = prev_end
        for j in range(1, m):
            best = val[j - 1].copy()
            cur = ch[j]
            for s in range(1, j):
                oq = int(qpre[j] - qpre[j - s])
                if oq > K:
                    break
                saved = dpre[j] - dpre[j - s - 1] - D[r[j - s - 1], r[j]]
                cand = val[j - 1 - s, : K + 1 - oq] - saved
                better = cand < best[oq:]
                if better.any():
                    best[oq:][better] = cand[better]
                    cur[oq:][better] = s
            val[j] = best
        vals.append(val)
        choices.append(ch)
        qprefix.append(qpre)
        prev_end = val[-1]
    return DpTable(vehicles, routes, K, vals, choices, qprefix)


def apply_removals(R: Routing, removals: RemovalSet) -> Routing:
    routes = []
    for v, r in enumerate(R.routes):
        drop = {j for (u, j) in removals if u == v}
        routes.append(tuple(x for j, x in enumerate(r) if j not in drop))
    return Routing(tuple(routes))


def removed_destinations(R: Routing, removals: RemovalSet) -> frozenset[int]:
    return frozenset(R.routes[v][j] for v, j in removals)


def _served_quantity(inst: Instance, R: Routing, vehicles: Sequence[int]) -> int:
    return int(sum(inst.qty[x] for v in vehicles for x in R.routes[v][1:-1]))


def solve_shortcut_homogeneous(
    inst: Instance, R: Routing, ef: float, cf: float
) -> tuple[RemovalSet, Routing]:
    """Smallest removed quantity meeting the quota, at minimal length.

    Assumes every vehicle has emission factor ``ef`` and cost factor ``cf``.
    """
    K = _served_quantity(inst, R, range(len(R.routes)))
    table = dp_fill(inst, R, K)
    slack = _slack(inst, R)
    for k in np.nonzero(ef * table.final <= inst.quota + slack)[0]:
        removals = table.reconstruct(int(k))
        S = apply_removals(R, removals)
        if is_admissible(inst, S):
            return removals, S
    raise InfeasibleError("quota unreachable even with every destination removed")


def _slack(inst: Instance, R: Routing) -> float:
    # table values drift by a few ulps from the direct route sums, so they only
    # shortlist candidates; admissibility is decided on the rebuilt routing
    return 1e-9 * (1.0 + routing_emission(inst, R))


def vehicle_groups(inst: Instance) -> list[tuple[float, float, tuple[int, ...]]]:
    """Vehicles grouped by identical ``(ef, cf)``, in order of first appearance."""
    groups: dict[tuple[float, float], list[int]] = {}
    for v, veh in enumerate(inst.fleet):
        groups.setdefault((veh.ef, veh.cf), []).append(v)
    return [(ef, cf, tuple(vs)) for (ef, cf), vs in groups.items()]


def compositions(k: int, bounds: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Tuples summing to ``k`` with ``0 <= k_i <= bounds[i]``, lexicographic."""
    if not bounds:
        if k == 0:
            yield ()
        return
    rest = sum(bounds[1:])
    for first in range(max(0, k - rest), min(k, bounds[0]) + 1):
        for tail in compositions(k - first, bounds[1:]):
            yield (first, *tail)


class _GroupTables:
    def __init__(self, inst: Instance, R: Routing):
        self.inst, self.R = inst, R
        self.slack = _slack(inst, R)
        self.groups = vehicle_groups(inst)
        self.tables = []
        for _, _, vs in self.groups:
            K = _served_quantity(inst, R, vs)
            self.tables.append(dp_fill(inst, R, K, vs))
        self.bounds = [t.k_max for t in self.tables]
        self.ef = [g[0] for g in self.groups]
        self.cf = [g[1] for g in self.groups]

    def best_at(self, k: int) -> tuple[int, ...] | None:
        """Cheapest split of ``k`` across groups whose subrouting is admissible."""
        shortlist = []
        for comp in compositions(k, self.bounds):
            lengths = [t.final[c] for t, c in zip(self.tables, comp)]
            emission = sum(e * L for e, L in zip(self.ef, lengths))
            if emission > self.inst.quota + self.slack:
                continue
            shortlist.append((sum(c * L for c, L in zip(self.cf, lengths)), comp))
        # stable sort keeps lexicographic order among equal costs
        shortlist.sort(key=lambda t: t[0])
        for _, comp in shortlist:
            if is_admissible(self.inst, apply_removals(self.R, self.removals(comp))):
                return comp
        return None

    def removals(self, comp: tuple[int, ...]) -> RemovalSet:
        return frozenset(itertools.chain.from_iterable(t.reconstruct(c) for t, c in zip(self.tables, comp)))


def solve_shortcut_multitype(inst: Instance, R: Routing) -> tuple[RemovalSet, Routing]:
    """Lexicographic optimum ``(removed quantity, cost)`` over subroutings of ``R``.

    One table per group of identical vehicles; budgets ``k`` are tried in
    increasing order and, for each, every split of ``k`` across the groups.
    """
    gt = _GroupTables(inst, R)
    for k in range(sum(gt.bounds) + 1):
        comp = gt.best_at(k)
        if comp is not None:
            removals = gt.removals(comp)
            return removals, apply_removals(R, removals)
    raise InfeasibleError("quota unreachable even with every destination removed")


def solve_shortcut_budget(inst: Instance, R: Routing, k: int) -> tuple[RemovalSet, Routing] | None:
    """Cheapest admissible subrouting removing quantity at most ``k``, or None."""
    gt = _GroupTables(inst, R)
    comp = gt.best_at(min(k, sum(gt.bounds)))
    if comp is None:
        return None
    removals = gt.removals(comp)
    return removals, apply_removals(R, removals)


def greedy_removal(
    inst: Instance, R: Routing, pp: PenaltyParams
) -> tuple[RemovalSet, Routing]:
    """Repeatedly remove the single destination minimizing the penalized objective.

    Candidates are scored incrementally from the splice saving of each kept
    destination; ties go to the lexicographically smallest ``(v, j)``.
    """
    if inst.quota < 0:
        raise InfeasibleError("negative quota")
    D = inst.D
    q = inst.qty
    ef = [v.ef for v in inst.fleet]
    cf = [v.cf for v in inst.fleet]
    # kept[v] lists the original positions still present in route v
    kept = [list(range(len(r))) for r in R.routes]
    removals: set[tuple[int, int]] = set()
    cur = R
    oq = inst.total_quantity - sum(int(q[x]) for r in R.routes for x in r[1:-1])
    while True:
        emis = routing_emission(inst, cur)
        if emis <= inst.quota:
            return frozenset(removals), cur
        cost = routing_cost(inst, cur)
        best, best_g = None, np.inf
        for v, r in enumerate(R.routes):
            pos = kept[v]
            for idx in range(1, len(pos) - 1):
                u, x, w = r[pos[idx - 1]], r[pos[idx]], r[pos[idx + 1]]
                saved = D[u, x] + D[x, w] - D[u, w]
                g = (
                    (oq + q[x]) * pp.P
                    + cost - cf[v] * saved
                    + pp.lam * max(0.0, emis - ef[v] * saved - inst.quota)
                )
                if g < best_g:
                    best, best_g = (v, idx), g
        if best is None:
            raise InfeasibleError("quota unreachable even with every destination removed")
        v, idx = best
        j = kept[v].pop(idx)
        removals.add((v, j))
        oq += int(q[R.routes[v][j]])
        cur = apply_removals(R, frozenset(removals))


def solve_shortcut(inst: Instance, R: Routing) -> tuple[RemovalSet, Routing]:
    """Dispatch to the homogeneous solver when the fleet has a single type."""
    groups = vehicle_groups(inst)
    if len(groups) == 1:
        ef, cf, _ = groups[0]
        return solve_shortcut_homogeneous(inst, R, ef, cf)
    return solve_shortcut_multitype(inst, R)
