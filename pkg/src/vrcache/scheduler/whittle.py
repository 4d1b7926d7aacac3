"""Exact Whittle indices of small single-arm MDPs and the indexability sweep.

An arm is ``MdpSpec(P, R, phi)``: ``P[a]`` is the S x S transition matrix of action ``a``
over one epoch of ``phi`` slots and ``R[a]`` the per-state reward. Under subsidy ``lam``
the passive action earns ``R[0] + lam``; the per-epoch discount is ``kappa ** phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class MdpSpec:
    P: np.ndarray  # (2, S, S)
    R: np.ndarray  # (2, S)
    phi: int = 1

    def __post_init__(self):
        S = self.R.shape[1]
        if self.P.shape != (2, S, S) or self.R.shape != (2, S):
            raise ValueError("P must be (2, S, S) and R (2, S)")
        if np.any(self.P < 0) or not np.allclose(self.P.sum(axis=2), 1.0):
            raise ValueError("transition rows must be probability vectors")
        if self.phi < 1:
            raise ValueError("phi must be >= 1")

    @property
    def n_states(self) -> int:
        return self.R.shape[1]

    def relabel(self, perm: np.ndarray) -> "MdpSpec":
        """Same arm with state ``i`` renamed ``perm[i]``."""
        inv = np.argsort(perm)
        return MdpSpec(self.P[:, inv][:, :, inv], self.R[:, inv], self.phi)


def q_values(
    mdp: MdpSpec, lam: float, gamma: float, tol: float = 1e-11, max_iter: int | None = None,
    V0: np.ndarray | None = None,
) -> np.ndarray:
    """Optimal ``Q[a, s]`` of the subsidised arm by value iteration (optionally warm-started)."""
    if not 0 <= gamma < 1:
        raise ValueError("per-epoch discount must lie in [0, 1)")
    R = mdp.R.copy()
    R[0] += lam
    # tolerance relative to the reward scale, so large subsidies stay above rounding noise
    scale = float(np.abs(R).max()) + 1.0
    stop = tol * scale * (1 - gamma) / 2
    if max_iter is None:
        max_iter = 10 + int(math.ceil(math.log(tol * (1 - gamma) ** 2 / 2) / math.log(gamma))) if gamma > 0 else 2
    V = np.zeros(mdp.n_states) if V0 is None else V0
    for _ in range(max_iter):
        Q = R + gamma * (mdp.P @ V)
        V_new = Q.max(axis=0)
        if np.abs(V_new - V).max() <= stop:
            return R + gamma * (mdp.P @ V_new)
        V = V_new
    raise RuntimeError(f"value iteration did not converge in {max_iter} sweeps")


def passive_set(mdp: MdpSpec, lam: float, gamma: float, tol: float = 1e-9, V0=None) -> np.ndarray:
    """States where the passive action is optimal (ties count as passive)."""
    Q = q_values(mdp, lam, gamma, V0=V0)
    return Q[0] >= Q[1] - tol


def _bracket(mdp: MdpSpec, gamma: float) -> float:
    span = float(mdp.R.max() - mdp.R.min())
    return (span + 1.0) / (1 - gamma) + 1.0


def exact_whittle(mdp: MdpSpec, kappa: float, tol: float = 1e-6) -> np.ndarray:
    """Per-state subsidy equalising active and passive values, by bisection.

    ``kappa`` is the per-slot discount; one epoch discounts by ``kappa ** phi``.
    """
    gamma = kappa ** mdp.phi
    B = _bracket(mdp, gamma)
    S = mdp.n_states
    lo = np.full(S, -B)
    hi = np.full(S, B)
    # bisect every state at once; each probe costs one value iteration
    while (hi - lo).max() > tol:
        mid = (lo + hi) / 2
        active_better = np.empty(S, dtype=bool)
        for s in range(S):
            Q = q_values(mdp, mid[s], gamma)
            active_better[s] = Q[1, s] > Q[0, s]
        lo = np.where(active_better, mid, lo)
        hi = np.where(active_better, hi, mid)
    return (lo + hi) / 2


def indexability_violations(mdp: MdpSpec, kappa: float, lams: np.ndarray | None = None) -> int:
    """Count adjacent subsidy pairs whose passive sets are not nested."""
    gamma = kappa ** mdp.phi
    if lams is None:
        B = _bracket(mdp, gamma)
        lams = np.linspace(-B, B, 401)
    prev = None
    bad = 0
    V = None
    for lam in np.sort(lams):
        Q = q_values(mdp, float(lam), gamma, V0=V)
        V = Q.max(axis=0)
        cur = Q[0] >= Q[1] - 1e-9
        if prev is not None and np.any(prev & ~cur):
            bad += 1
        prev = cur
    return bad


def buffer_mdp(rng: np.random.Generator, levels: int | None = None, regimes: int | None = None, phi: int | None = None) -> MdpSpec:
    """Random equal-delay arm shaped like a headset's delivery problem.

    State ``(b, r)``: ``b`` buffered SVCs still ahead of playback, ``r`` a movement regime.
    Activation delivers one SVC (b + 1, capped); each epoch playback consumes one with a
    regime-dependent probability. The active reward counts future viewpoints the new SVC
    renders, so it falls as the buffer fills and is zero when full. Regimes evolve
    independently of the action.
    """
    levels = int(rng.integers(2, 11)) if levels is None else levels
    regimes = int(rng.integers(1, 7)) if regimes is None else regimes
    if levels * regimes > 60:
        regimes = max(1, 60 // levels)
    phi = int(rng.integers(1, 9)) if phi is None else phi
    S = levels * regimes
    T = rng.dirichlet(np.ones(regimes), size=regimes)
    consume = rng.uniform(0.1, 0.9, size=regimes)
    worth = rng.uniform(0.2, 1.0, size=regimes)
    decay = rng.uniform(0.3, 0.95)

    def idx(b, r):
        return b * regimes + r

    P = np.zeros((2, S, S))
    R = np.zeros((2, S))
    for b in range(levels):
        for r in range(regimes):
            s = idx(b, r)
            for a in (0, 1):
                b1 = min(b + a, levels - 1)
                for r2 in range(regimes):
                    pr = T[r, r2]
                    if b1 > 0:
                        P[a, s, idx(b1 - 1, r2)] += pr * consume[r]
                        P[a, s, idx(b1, r2)] += pr * (1 - consume[r])
                    else:
                        P[a, s, idx(0, r2)] += pr
            R[1, s] = 0.0 if b == levels - 1 else worth[r] * decay ** b
    return MdpSpec(P, R, phi)
