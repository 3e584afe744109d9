"""Decentralized learning: one bandit agent per package.

Each agent picks an action in ``{omit} + fleet`` (action ``0`` is omit,
action ``v + 1`` is vehicle ``v``).  The joint choice is routed by nearest
neighbor, with overloaded vehicles dropping their highest-index packages,
and every agent receives a reward in ``[-2, 0]`` that mixes its own
marginal routing cost with the local cost of the vehicle it chose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    OMIT,
    Instance,
    PenaltyParams,
    Routing,
    is_admissible,
    omitted_quantity,
    penalized_objective_g,
    route_length,
    routing_emission,
    terminal_reward,
)
from .routing import route_for_vehicle_assignment


@dataclass(frozen=True)
class BanditConfig:
    horizon: int = 2000
    gamma: float = 0.1
    # "t": eta_t = 1 / (d sqrt(t)); "T": constant 1 / (d sqrt(T))
    eta_schedule: str = "t"
    lri_b: float = 0.003
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.lri_b < 1:
            raise ValueError("lri_b must lie in (0, 1)")
        if self.eta_schedule not in ("t", "T"):
            raise ValueError("eta_schedule must be 't' or 'T'")

    def eta(self, t: int, d: int) -> float:
        n = t if self.eta_schedule == "t" else max(self.horizon, 1)
        return 1.0 / (d * math.sqrt(n))


def route_joint(inst: Instance, pp: PenaltyParams, a) -> Routing:
    return route_for_vehicle_assignment(inst, a, pp, overflow="drop_highest")


def lcf(inst: Instance, pp: PenaltyParams, R: Routing, v: int, a) -> float:
    """Local cost of vehicle ``v``: penalized tour cost plus its overflow penalty.

    For ``v == OMIT`` this is the omission penalty of the packages that chose
    to be omitted.
    """
    q = inst.qty
    if v == OMIT:
        return pp.P * sum(int(q[i + 1]) for i, x in enumerate(a) if x == OMIT)
    veh = inst.fleet[v]
    r = R.routes[v]
    on_route = set(r[1:-1])
    overflow = sum(int(q[i + 1]) for i, x in enumerate(a) if x == v and i + 1 not in on_route)
    L = route_length(inst.D, r)
    return veh.cf * L + overflow * pp.P + pp.lam * veh.ef * L


def marginal_delta(inst: Instance, pp: PenaltyParams, R: Routing, i: int) -> float:
    """Penalized saving of splicing destination ``i`` out of its route (0 if unserved)."""
    for v, r in enumerate(R.routes):
        if i in r[1:-1]:
            j = r.index(i)
            M = inst.penalized_rows(v, pp.lam)
            u, w = r[j - 1], r[j + 1]
            return M[u][i] + M[i][w] - M[u][w]
    return 0.0


def agent_rewards(inst: Instance, pp: PenaltyParams, R: Routing, a) -> np.ndarray:
    """Raw rewards of all agents, each in ``[-2, 0]`` (0 is best)."""
    delta = np.array([marginal_delta(inst, pp, R, i) for i in range(1, inst.d + 1)])
    served = [i - 1 for i in R.served()]
    dmax = delta[served].max() if served else 0.0
    term1 = delta / dmax if dmax > 0 else np.zeros(inst.d)

    options = [OMIT, *range(inst.n_vehicles)]
    costs = {v: lcf(inst, pp, R, v, a) for v in options}
    lo, hi = min(costs.values()), max(costs.values())
    if hi > lo:
        term2 = np.array([(costs[x] - lo) / (hi - lo) for x in a])
    else:
        term2 = np.zeros(inst.d)
    return -(term1 + term2)


def agent_reward(inst: Instance, pp: PenaltyParams, R: Routing, a, i: int) -> float:
    """Raw reward of the agent owning destination ``i`` (1-based)."""
    return float(agent_rewards(inst, pp, R, a)[i - 1])


def rescale(raw: np.ndarray) -> np.ndarray:
    """Map raw rewards from ``[-2, 0]`` to ``[0, 1]``."""
    return (raw + 2.0) / 2.0


class Exp3Policy:
    """Independent EXP3 learners, one row per agent, kept in log-weights."""

    def __init__(self, n_agents: int, n_actions: int, gamma: float):
        self.gamma = gamma
        self.log_w = np.zeros((n_agents, n_actions))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w - self.log_w.max(axis=1, keepdims=True))

    def probs(self) -> np.ndarray:
        w = self.weights
        k = w.shape[1]
        return (1 - self.gamma) * w / w.sum(axis=1, keepdims=True) + self.gamma / k

    def update(self, actions: np.ndarray, rewards: np.ndarray, eta: float, probs: np.ndarray) -> None:
        rows = np.arange(len(actions))
        self.log_w[rows, actions] += eta * rewards / probs[rows, actions]


class LriPolicy:
    """Linear reward-inaction automata: ``p <- p + b r (e_a - p)``."""

    def __init__(self, n_agents: int, n_actions: int, b: float):
        self.b = b
        self.p = np.full((n_agents, n_actions), 1.0 / n_actions)

    def probs(self) -> np.ndarray:
        return self.p

    def update(self, actions: np.ndarray, rewards: np.ndarray) -> None:
        step = self.b * rewards[:, None]
        onehot = np.zeros_like(self.p)
        onehot[np.arange(len(actions)), actions] = 1.0
        self.p = self.p + step * (onehot - self.p)


def sample_actions(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(probs.shape[0])
    idx = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


@dataclass
class BanditResult:
    assignment: tuple[int, ...]
    routing: Routing
    g: float
    admissible: bool
    trace: list[dict] = field(default_factory=list, repr=False)
    probs: np.ndarray | None = field(default=None, repr=False)


class _Best:
    def __init__(self, inst: Instance, pp: PenaltyParams):
        self.inst, self.pp = inst, pp
        self.key = None

    def offer(self, a, R) -> None:
        g = penalized_objective_g(self.inst, self.pp, R)
        key = (not is_admissible(self.inst, R), g)
        if self.key is None or key < self.key:
            self.key, self.a, self.R, self.g = key, a, R, g

    def row(self, step: int) -> dict:
        return {
            "step": step,
            "best_reward": terminal_reward(self.inst, self.pp, self.R),
            "emission": routing_emission(self.inst, self.R),
            "oq": omitted_quantity(self.inst, self.R),
        }

    def result(self, trace, probs) -> BanditResult:
        return BanditResult(self.a, self.R, self.g, not self.key[0], trace, probs)


def _run(inst, pp, cfg, policy, update):
    rng = np.random.default_rng(cfg.seed)
    best = _Best(inst, pp)
    trace = []
    rounds = range(1, cfg.horizon + 1) if cfg.horizon > 0 else [0]
    for t in rounds:
        probs = policy.probs().copy()
        actions = sample_actions(probs, rng)
        a = tuple(int(x) - 1 for x in actions)
        R = route_joint(inst, pp, a)
        best.offer(a, R)
        if t == 0:
            break
        r_hat = rescale(agent_rewards(inst, pp, R, a))
        update(t, actions, r_hat, probs)
        trace.append(best.row(t))
    return best.result(trace, policy.probs().copy())


def exp3_run(inst: Instance, pp: PenaltyParams, cfg: BanditConfig = BanditConfig()) -> BanditResult:
    policy = Exp3Policy(inst.d, inst.n_vehicles + 1, cfg.gamma)

    def update(t, actions, r_hat, probs):
        policy.update(actions, r_hat, cfg.eta(t, inst.d), probs)

    return _run(inst, pp, cfg, policy, update)


def lri_run(inst: Instance, pp: PenaltyParams, cfg: BanditConfig = BanditConfig()) -> BanditResult:
    policy = LriPolicy(inst.d, inst.n_vehicles + 1, cfg.lri_b)

    def update(t, actions, r_hat, probs):
        policy.update(actions, r_hat)

    return _run(inst, pp, cfg, policy, update)
