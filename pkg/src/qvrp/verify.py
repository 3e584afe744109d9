"""Self-checks on the adversarial instance families, run by ``qvrp verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance_gen import (
    brute_force_knapsack,
    gap_alternative_routing,
    gen_gap_instance,
    gen_knapsack_reduction,
)
from .model import check_routing, is_admissible, omitted_quantity
from .shortcut import removed_destinations, solve_shortcut


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


def gap_regression(n: int) -> Check:
    """Fixed-routing optimum drops n/2 destinations; a rerouted solution drops one."""
    inst, star = gen_gap_instance(n)
    removals, _ = solve_shortcut(inst, star)
    dropped = sorted(removed_destinations(star, removals))
    alt = gap_alternative_routing(n)
    check_routing(inst, alt)
    ok = (
        len(dropped) == n // 2
        and dropped == list(range(n // 2 + 1, n + 1))
        and is_admissible(inst, alt)
        and omitted_quantity(inst, alt) == 1
    )
    return Check(f"gap n={n}", ok, f"shortcut drops {dropped}; alternative omits {omitted_quantity(inst, alt)}")


def random_knapsack(rng: np.random.Generator, max_items: int = 10, max_value: int = 20):
    n = int(rng.integers(1, max_items + 1))
    items = [(int(rng.integers(1, max_value + 1)), int(rng.integers(1, max_value + 1))) for _ in range(n)]
    total_c = sum(c for c, _ in items)
    total_v = sum(v for _, v in items)
    C = int(rng.integers(0, total_c + 1))
    V = int(rng.integers(0, total_v + 1))
    return items, C, V


def knapsack_checks(count: int = 100, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    mismatches = []
    for t in range(count):
        items, C, V = random_knapsack(rng)
        red = gen_knapsack_reduction(items, C, V)
        if red.decide() != brute_force_knapsack(items, C, V):
            mismatches.append((items, C, V))
    return Check(f"knapsack reduction x{count}", not mismatches, f"{len(mismatches)} mismatches")


def run_all(knapsack_count: int = 100, seed: int = 0) -> list[Check]:
    return [gap_regression(n) for n in (4, 6, 8)] + [knapsack_checks(knapsack_count, seed)]
