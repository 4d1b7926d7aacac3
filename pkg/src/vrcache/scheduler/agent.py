"""Per-headset Whittle-index learner: a Q network, an index network and their updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approx import Mlp, MlpSpec, clip_norm


@dataclass(frozen=True)
class SchedulerHyper:
    discount: float = 0.9  # kappa, per slot
    epoch_slots: int = 8  # phi
    wi_step: float = 0.1  # varphi in the reference-index update
    lr_q: float = 5e-4
    lr_w: float = 1e-4
    epsilon: float = 1.0
    eps_min: float = 0.05
    eps_attn: float = 0.999
    computing_units: int = 1
    discount_next_q: bool = False  # apply kappa**phi to the next-state Q term
    target: str = "same"  # "same": Q(s', a) with the taken action; "max": max over a'
    grad_clip: float = 10.0
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "elu"
    lr_decay_steps: float = 0.0  # tau > 0 scales both rates by 1 / (1 + updates / tau)

    def __post_init__(self):
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        if self.lr_q <= 0 or self.lr_w <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 <= self.epsilon <= 1 or not 0 <= self.eps_min <= 1:
            raise ValueError("epsilon values must lie in [0, 1]")
        if self.epoch_slots < 1 or self.computing_units < 0:
            raise ValueError("epoch_slots must be >= 1 and computing_units >= 0")
        if self.target not in ("same", "max"):
            raise ValueError(f"unknown Q target {self.target!r}")

    @property
    def gamma(self) -> float:
        """Weight of the next-state Q term."""
        return self.discount ** self.epoch_slots if self.discount_next_q else 1.0


class NonFiniteLoss(FloatingPointError):
    pass


class WiAgent:
    """Q(s, a | theta_Q) on action-gated features and lambda(s | theta_W) on ``features``.

    The Q input is ``[x (1 - a), x a]`` so even a linear network can give each action its
    own response to the state.
    """

    def __init__(self, n_features: int, hyper: SchedulerHyper, rng: np.random.Generator):
        self.hyper = hyper
        self.n_features = n_features
        self.q_net = Mlp.init(MlpSpec((2 * n_features, *hyper.hidden, 1), hyper.activation), rng)
        self.w_net = Mlp.init(MlpSpec((n_features, *hyper.hidden, 1), hyper.activation), rng)
        self.updates = 0

    @staticmethod
    def _qa(x: np.ndarray, a: int) -> np.ndarray:
        return np.concatenate([x * (1 - a), x * a])

    def q(self, x: np.ndarray, a: int) -> float:
        return float(self.q_net(self._qa(x, a)))

    def wi(self, x: np.ndarray) -> float:
        return float(self.w_net(x))

    def q_target(self, x: np.ndarray, a: int, r: float, x_next: np.ndarray) -> float:
        h = self.hyper
        if h.target == "same":
            nxt = self.q(x_next, a)
        else:
            nxt = max(self.q(x_next, 0), self.q(x_next, 1))
        return h.gamma * nxt + self.wi(x) * (1 - a) + r * a

    def update_q(self, x: np.ndarray, a: int, r: float, x_next: np.ndarray) -> float:
        """One step on [Q(s,a) - target]^2 with the target held fixed; returns the loss."""
        target = self.q_target(x, a, r, x_next)
        q, g = self.q_net.grad(self._qa(x, a))
        err = float(q) - target
        loss = err * err
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"Q loss is {loss} (q={q}, target={target}) after {self.updates} updates")
        self.q_net.theta -= self.hyper.lr_q * self._decay() * clip_norm(2 * err * g, self.hyper.grad_clip)
        self.updates += 1
        return loss

    def _decay(self) -> float:
        tau = self.hyper.lr_decay_steps
        return 1.0 / (1.0 + self.updates / tau) if tau > 0 else 1.0

    def reference_index(self, x: np.ndarray) -> float:
        """lambda_hat = lambda(s) - varphi [Q(s, 0) - Q(s, 1)]."""
        return self.wi(x) - self.hyper.wi_step * (self.q(x, 0) - self.q(x, 1))

    def update_wi(self, x: np.ndarray) -> float:
        """One step regressing lambda(s) onto the fixed reference index; returns the loss."""
        target = self.reference_index(x)
        lam, g = self.w_net.grad(x)
        err = float(lam) - target
        loss = err * err
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"WI loss is {loss} after {self.updates} updates")
        self.w_net.theta -= self.hyper.lr_w * self._decay() * clip_norm(2 * err * g, self.hyper.grad_clip)
        return loss


def train_on_mdp(
    mdp, hyper: SchedulerHyper, steps: int, rng: np.random.Generator,
    features: np.ndarray | None = None,
) -> WiAgent:
    """Learn indices of one explicit arm from uniformly random actions along a single trajectory.

    ``features[s]`` is the input of state ``s`` (one-hot by default). Rewards are the
    arm's active rewards; the passive reward enters through the learned index.
    """
    S = mdp.n_states
    X = np.eye(S) if features is None else features
    agent = WiAgent(X.shape[1], hyper, rng)
    cum = np.cumsum(mdp.P, axis=2)
    s = int(rng.integers(S))
    acts = rng.integers(2, size=steps)
    us = rng.random(steps)
    for k in range(steps):
        a = int(acts[k])
        s2 = min(int(np.searchsorted(cum[a, s], us[k], side="right")), S - 1)
        agent.update_q(X[s], a, float(mdp.R[1, s]) if a else 0.0, X[s2])
        agent.update_wi(X[s])
        s = s2
    return agent
