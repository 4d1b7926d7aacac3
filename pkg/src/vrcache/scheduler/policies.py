"""Slot-level scheduling decisions: epsilon-greedy Whittle-index order and the baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class AgentView:
    """What one headset reports to the edge server in a slot."""

    user: int
    pending: bool
    wi: float = 0.0
    deadline: int = 0  # playback slot of the pending request


def reward(rendered: Sequence[bool] | np.ndarray, action: int, kappa: float, phi: int) -> float:
    """sum_{j >= phi} kappa^j 1[rendered[j]]; ``rendered[j]`` refers to slot k + j."""
    if action not in (0, 1):
        raise ValueError("action must be 0 or 1")
    if action == 0:
        return 0.0
    r = np.asarray(rendered, dtype=bool)[phi:]
    if r.size == 0:
        return 0.0
    j = np.arange(phi, phi + r.size)
    return float(np.sum(kappa ** j[r]))


@dataclass
class EpsilonSchedule:
    epsilon: float
    eps_min: float
    attn: float

    def step(self) -> float:
        if self.epsilon > self.eps_min:
            self.epsilon = max(self.eps_min, self.epsilon * self.attn)
        return self.epsilon


def _free_pending(agents: Sequence[AgentView]) -> list[AgentView]:
    return sorted((a for a in agents if a.pending), key=lambda a: a.user)


def schedule_slot(
    agents: Sequence[AgentView], free_units: int, epsilon: float, rng: np.random.Generator,
) -> list[int]:
    """Users to serve, one per free unit: random with probability epsilon, else highest WI.

    Index ties go to the lowest user id.
    """
    pool = _free_pending(agents)
    out: list[int] = []
    for _ in range(free_units):
        if not pool:
            break
        if rng.random() < epsilon:
            pick = pool[int(rng.integers(len(pool)))]
        else:
            pick = max(pool, key=lambda a: (a.wi, -a.user))
        out.append(pick.user)
        pool.remove(pick)
    return out


class Baseline:
    name = "baseline"

    def select(self, agents: Sequence[AgentView], free_units: int, rng: np.random.Generator) -> list[int]:
        raise NotImplementedError


class Urf(Baseline):
    """Urgent request first: earliest deadline, then lowest user id."""

    name = "URF"

    def select(self, agents, free_units, rng):
        pool = sorted(_free_pending(agents), key=lambda a: (a.deadline, a.user))
        return [a.user for a in pool[:free_units]]


class RoundRobin(Baseline):
    """Circular order over user ids, skipping users without a pending request."""

    name = "RoundRobin"

    def __init__(self):
        self.last = -1

    def select(self, agents, free_units, rng):
        pool = _free_pending(agents)
        out = []
        while pool and len(out) < free_units:
            after = [a for a in pool if a.user > self.last]
            pick = after[0] if after else pool[0]
            out.append(pick.user)
            pool.remove(pick)
            self.last = pick.user
        return out


class RandomPolicy(Baseline):
    name = "Random"

    def select(self, agents, free_units, rng):
        pool = _free_pending(agents)
        out = []
        while pool and len(out) < free_units:
            out.append(pool.pop(int(rng.integers(len(pool)))).user)
        return out


BASELINES = {"URF": Urf, "RoundRobin": RoundRobin, "Random": RandomPolicy}


def baseline_schedule(
    policy: str | Baseline, agents: Sequence[AgentView], free_units: int, rng: np.random.Generator,
) -> list[int]:
    """Stateless entry point; pass a :class:`Baseline` instance to keep RoundRobin's pointer."""
    if isinstance(policy, str):
        if policy not in BASELINES:
            raise ValueError(f"unknown baseline {policy!r}")
        policy = BASELINES[policy]()
    return policy.select(agents, free_units, rng)
