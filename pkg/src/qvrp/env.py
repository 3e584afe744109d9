"""Sequential-removal environment over a fixed instance.

An episode starts from the routing of every package and removes one served
destination per step until the routing meets the quota.  Action ``k``
(0-based) omits destination ``k + 1``; the action mask has one entry per
destination and is true while that destination is still served.

The functional pair :func:`env_reset` / :func:`env_step` works on immutable
:class:`EnvState` values; :class:`QuotaEnv` wraps them with the usual
``reset``/``step`` surface and records the trajectory.

Reward modes (each in ``[0, 1]`` on triangle-inequality instances):

``"literal"``
    ``(P*sum(q) - L_P(R'))/(P*sum(q))`` while the new routing ``R'`` still
    exceeds the quota, 0 once it does not.
``"terminal"``
    the same formula, paid once at the step that reaches the quota.
``"shaped"``
    ``1 - g(R') / (P*sum(q) + lam*excess_0)``, a dense signal whose one-step
    argmax is the greedy-removal choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .model import (
    Instance,
    PenaltyParams,
    Routing,
    excess_emission,
    loss_lp,
    omitted_quantity,
    penalized_objective_g,
    routing_emission,
)
from .routing import LocalSearchConfig, remove_destination, solve_vrp_local_search

REWARD_MODES = ("literal", "terminal", "shaped")
PAD = -1.0


class InvalidActionError(ValueError):
    pass


@dataclass(frozen=True)
class EnvState:
    inst: Instance
    pp: PenaltyParams
    routing: Routing
    removed: frozenset[int]
    excess: float
    initial_excess: float
    done: bool
    steps: int = 0
    reward_mode: str = "terminal"


def fleet_mean_matrix(inst: Instance, lam: float) -> np.ndarray:
    scale = np.mean([v.cf + lam * v.ef for v in inst.fleet])
    return scale * inst.D


def observation_dim(inst: Instance) -> int:
    max_cap = max(v.cap for v in inst.fleet)
    return (inst.d + 1) ** 2 + inst.n_vehicles * (max_cap + 2) + 1


def observation(state: EnvState) -> np.ndarray:
    inst = state.inst
    width = max(v.cap for v in inst.fleet) + 2
    routes = np.full((inst.n_vehicles, width), PAD)
    for v, r in enumerate(state.routing.routes):
        routes[v, : len(r)] = r
    return np.concatenate([
        fleet_mean_matrix(inst, state.pp.lam).ravel(),
        routes.ravel(),
        [state.excess],
    ])


def action_mask(state: EnvState) -> np.ndarray:
    mask = np.zeros(state.inst.d, dtype=bool)
    for i in state.routing.served():
        mask[i - 1] = True
    return mask


def env_reset(
    inst: Instance,
    pp: PenaltyParams,
    routing_cfg: LocalSearchConfig = LocalSearchConfig(),
    reward_mode: str = "terminal",
    routing: Routing | None = None,
) -> tuple[EnvState, np.ndarray, np.ndarray]:
    """Start an episode from the all-packages routing (or a supplied one)."""
    if reward_mode not in REWARD_MODES:
        raise ValueError(f"reward_mode must be one of {REWARD_MODES}")
    if routing is None:
        routing = solve_vrp_local_search(inst, [True] * inst.d, pp, routing_cfg)
    excess = excess_emission(inst, routing)
    state = EnvState(
        inst, pp, routing, frozenset(), excess, excess, excess == 0, 0, reward_mode
    )
    return state, observation(state), action_mask(state)


def _reward(state: EnvState, R: Routing, excess: float) -> float:
    inst, pp = state.inst, state.pp
    worst = pp.P * inst.total_quantity
    if state.reward_mode == "shaped":
        return 1.0 - penalized_objective_g(inst, pp, R) / (worst + pp.lam * state.initial_excess)
    pay = excess > 0 if state.reward_mode == "literal" else excess == 0
    return (worst - loss_lp(inst, pp, R)) / worst if pay else 0.0


def env_step(state: EnvState, action: int):
    """Omit destination ``action + 1``; returns ``(state, obs, reward, done, mask)``."""
    if state.done:
        raise InvalidActionError("episode is over")
    i = int(action) + 1
    if not 1 <= i <= state.inst.d or i not in state.routing.served():
        raise InvalidActionError(f"action {action} is masked")
    R = remove_destination(state.routing, i)
    excess = excess_emission(state.inst, R)
    reward = _reward(state, R, excess)
    new = replace(
        state,
        routing=R,
        removed=state.removed | {i},
        excess=excess,
        done=excess == 0,
        steps=state.steps + 1,
    )
    return new, observation(new), reward, new.done, action_mask(new)


def greedy_rollout(state: EnvState) -> list[int]:
    """Play the action of highest one-step reward until done (ties: lowest index)."""
    actions = []
    while not state.done:
        best, best_r = None, -np.inf
        for k in np.flatnonzero(action_mask(state)):
            _, _, r, _, _ = env_step(state, int(k))
            if r > best_r:
                best, best_r = int(k), r
        state, *_ = env_step(state, best)
        actions.append(best)
    return actions


class QuotaEnv:
    """Stateful wrapper: ``reset() -> (obs, mask)``, ``step(a) -> (obs, reward, done, mask)``."""

    def __init__(
        self,
        inst: Instance,
        pp: PenaltyParams | None = None,
        routing_cfg: LocalSearchConfig = LocalSearchConfig(),
        reward_mode: str = "terminal",
    ):
        self.inst = inst
        self.pp = pp or PenaltyParams.for_instance(inst)
        self.routing_cfg = routing_cfg
        self.reward_mode = reward_mode
        self._initial: Routing | None = None
        self.state: EnvState | None = None
        self.history: list[dict] = []

    @property
    def observation_dim(self) -> int:
        return observation_dim(self.inst)

    def reset(self, routing: Routing | None = None):
        # the initial routing is solved once and reused across episodes
        if routing is not None:
            self._initial = routing
        self.state, obs, mask = env_reset(
            self.inst, self.pp, self.routing_cfg, self.reward_mode, self._initial
        )
        self._initial = self.state.routing
        self.history = []
        return obs, mask

    def step(self, action: int):
        if self.state is None:
            raise RuntimeError("call reset() first")
        self.state, obs, reward, done, mask = env_step(self.state, action)
        self.history.append({
            "action": int(action),
            "reward": reward,
            "emission": routing_emission(self.inst, self.state.routing),
            "oq": omitted_quantity(self.inst, self.state.routing),
        })
        return obs, reward, done, mask

    def write_trajectory(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.history:
                fh.write(json.dumps(rec) + "\n")
