"""Tiered viewpoint-movement chain, expected frame misses per delivery interval and the
layer-0 count controller."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import TileGrid


def ring_size(zeta: int) -> int:
    return 1 if zeta == 0 else 8 * zeta


def tier_geometry(x0: int, grid: TileGrid | None = None) -> tuple[int, tuple[int, ...]]:
    """Largest tier F whose cumulative square-ring tile count fits in ``x0``."""
    if x0 < 1:
        raise ValueError(f"x0 must be >= 1, got {x0}")
    if grid is not None and x0 > grid.n_tiles:
        raise ValueError(f"x0={x0} exceeds the {grid.n_tiles} tiles of the grid")
    F, total = 0, 1
    while total + ring_size(F + 1) <= x0:
        F += 1
        total += ring_size(F)
    return F, tuple(ring_size(z) for z in range(F + 1))


@dataclass
class MovementChain:
    """Chain on V(k), the nearest covered tier of the viewpoint; V > F is a frame miss.

    ``clamp_events`` counts rows whose raw probabilities needed repair.
    """

    move_prob: float
    reacquire_prob: float
    max_tier: int
    tier_sizes: tuple[int, ...]
    clamp_events: int = field(default=0, compare=False)

    def __post_init__(self):
        if not 0 <= 4 * self.move_prob <= 1:
            raise ValueError(f"need 0 <= 4p <= 1, got p={self.move_prob}")
        if not 0 <= self.reacquire_prob <= 1:
            raise ValueError("q must lie in [0, 1]")
        if len(self.tier_sizes) < self.max_tier + 1 or min(self.tier_sizes) <= 0:
            raise ValueError("need a positive tier size for every tier 0..F")

    @classmethod
    def for_x0(cls, move_prob: float, reacquire_prob: float, x0: int) -> "MovementChain":
        F, sizes = tier_geometry(x0)
        return cls(move_prob, reacquire_prob, F, sizes)

    def q(self, zeta: int) -> float:
        """q_zeta = q M(zeta) / sum_{z <= F} M(z); zero outside the covered tiers."""
        if zeta < 0 or zeta > self.max_tier:
            return 0.0
        return self.reacquire_prob * self.tier_sizes[zeta] / sum(self.tier_sizes[: self.max_tier + 1])

    def raw_row(self, state: int) -> dict[int, float]:
        """Transition probabilities straight from the tier recurrence, before any repair."""
        if state < 0:
            raise ValueError("state must be >= 0")
        p = self.move_prob
        if state == 0:
            out = 4 * p * (1 - self.q(0))
            return {1: out, 0: 1 - out}
        beta = min(state, self.max_tier)
        q_upto = lambda b: sum(self.q(z) for z in range(b + 1))  # noqa: E731
        row: dict[int, float] = {}

        def put(s, v):
            row[s] = row.get(s, 0.0) + v

        put(state + 1, p * (1 - q_upto(beta)))
        put(state - 1, p * (1 - q_upto(beta - 1) + 4 * self.q(state - 1)))
        for z in range(2, beta + 1):
            put(z, 4 * p * self.q(z))
        put(state, 1 - 2 * p * (1 + q_upto(beta - 1)) + p * self.q(state))
        return row

    def row(self, state: int) -> dict[int, float]:
        """Raw row with negatives clamped to 0 and the row renormalised to sum 1."""
        row = self.raw_row(state)
        total = sum(row.values())
        if any(v < 0 or v > 1 for v in row.values()) or abs(total - 1.0) > 1e-12:
            self.clamp_events += 1
            row = {s: max(v, 0.0) for s, v in row.items()}
            total = sum(row.values())
            row = {s: v / total for s, v in row.items()}
        return row

    def matrix(self, n_states: int) -> np.ndarray:
        """Dense transition matrix on states ``0..n_states-1``; the top state absorbs upward mass."""
        P = np.zeros((n_states, n_states))
        for s in range(n_states):
            for t, v in self.row(s).items():
                P[s, min(t, n_states - 1)] += v
        return P


def tier_transitions(chain: MovementChain, state: int) -> dict[int, float]:
    return chain.row(state)


@dataclass(frozen=True)
class MissStats:
    mean_misses: float
    horizon_slots: int
    distribution: np.ndarray  # P(N = n) for n = 0..horizon


def expected_misses(chain: MovementChain, x0: int | None, horizon_slots: int) -> MissStats:
    """Exact law of the number of slots 1..horizon with V(k) > F, from V(0) = 0.

    When ``x0`` is given, F and the tier sizes are taken from :func:`tier_geometry`.
    """
    if horizon_slots < 1:
        raise ValueError("horizon must be >= 1")
    if x0 is not None:
        F, sizes = tier_geometry(x0)
        chain = MovementChain(chain.move_prob, chain.reacquire_prob, F, sizes)
    F = chain.max_tier
    n_states = F + horizon_slots + 2  # one step moves at most one tier up
    P = chain.matrix(n_states)
    miss = np.arange(n_states) > F
    # joint[s, n]: probability of being in s having counted n misses
    joint = np.zeros((n_states, horizon_slots + 1))
    joint[0, 0] = 1.0
    for _ in range(horizon_slots):
        nxt = P.T @ joint
        shifted = np.zeros_like(nxt)
        shifted[:, 1:] = nxt[:, :-1]
        joint = np.where(miss[:, None], shifted, nxt)
    dist = joint.sum(axis=0)
    return MissStats(float(dist @ np.arange(horizon_slots + 1)), horizon_slots, dist)


def simulate_misses(
    chain: MovementChain, x0: int | None, horizon_slots: int, episodes: int, rng: np.random.Generator,
) -> np.ndarray:
    """Monte-Carlo miss counts per episode on the same repaired chain."""
    if x0 is not None:
        F, sizes = tier_geometry(x0)
        chain = MovementChain(chain.move_prob, chain.reacquire_prob, F, sizes)
    F = chain.max_tier
    n_states = F + horizon_slots + 2
    cum = np.cumsum(chain.matrix(n_states), axis=1)
    cum[:, -1] = 1.0
    state = np.zeros(episodes, dtype=np.int64)
    count = np.zeros(episodes, dtype=np.int64)
    for _ in range(horizon_slots):
        u = rng.random(episodes)
        state = (u[:, None] >= cum[state]).sum(axis=1)
        count += state > F
    return count


def adapt_x0(current_x0: int, measured_miss_rate: float, threshold: float, bounds: tuple[int, int]) -> int:
    lo, hi = bounds
    if lo > hi:
        raise ValueError("bounds must satisfy lo <= hi")
    if measured_miss_rate > threshold:
        return min(current_x0 + 1, hi)
    return max(current_x0 - 1, lo)


def x0_sweep(
    move_prob: float, reacquire_prob: float, x0_values: Sequence[int], horizon_slots: int,
    episodes: int = 0, seed: int = 0,
) -> list[dict]:
    """Analytic mean misses per x0, with a Monte-Carlo check when ``episodes`` > 0."""
    rng = np.random.default_rng(seed)
    rows = []
    for x0 in x0_values:
        chain = MovementChain.for_x0(move_prob, reacquire_prob, x0)
        stats = expected_misses(chain, None, horizon_slots)
        mc_mean = mc_sd = float("nan")
        if episodes > 0:
            counts = simulate_misses(chain, None, horizon_slots, episodes, rng)
            mc_mean, mc_sd = float(counts.mean()), float(counts.std(ddof=1))
        rows.append(dict(x0=x0, F=chain.max_tier, mean_misses=stats.mean_misses, mc_mean=mc_mean, mc_sd=mc_sd))
    return rows


def save_x0_sweep(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["x0", "F", "mean_misses", "mc_mean", "mc_sd"])
        w.writeheader()
        for r in rows:
            w.writerow(r)
