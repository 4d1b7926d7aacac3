"""Per-request delivery delay, delay-requirement satisfaction and the coverage objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .catalog import Catalog, MvcId, SvcId, Viewpoint, render_set, svc_size


@dataclass(frozen=True)
class DelayParams:
    backhaul_rate: float = 700e6  # bits/s
    chi: float = 5e-8  # seconds per bit of MVC stitching
    deadline: float = 0.085  # H, seconds
    slot_len: float = 0.033  # delta, seconds

    def __post_init__(self):
        if self.backhaul_rate <= 0 or self.deadline <= 0 or self.slot_len <= 0 or self.chi < 0:
            raise ValueError(f"invalid delay parameters {self}")

    @property
    def fps(self) -> float:
        return 1.0 / self.slot_len


@dataclass(frozen=True)
class ChannelModel:
    rate_low: float = 400e6  # bits/s
    rate_high: float = 704e6
    p_to_high: float = 0.3  # p_L: Low -> High
    p_to_low: float = 0.6  # p_H: High -> Low

    def __post_init__(self):
        if not 0 < self.rate_low <= self.rate_high:
            raise ValueError("need 0 < rate_low <= rate_high")
        for p in (self.p_to_high, self.p_to_low):
            if not 0 <= p <= 1:
                raise ValueError("transition probabilities must lie in [0, 1]")
        if self.p_to_high + self.p_to_low == 0:
            raise ValueError("chain with no transitions has no unique stationary law")

    @property
    def pi_high(self) -> float:
        return self.p_to_high / (self.p_to_high + self.p_to_low)

    @property
    def pi_low(self) -> float:
        return self.p_to_low / (self.p_to_high + self.p_to_low)

    @property
    def mean_rate(self) -> float:
        """Stationary-weighted mean rate."""
        return self.pi_high * self.rate_high + self.pi_low * self.rate_low

    @property
    def naive_mean_rate(self) -> float:
        """(R_L + R_H) / (p_L + p_H), kept for comparison with the stationary mean."""
        return (self.rate_low + self.rate_high) / (self.p_to_high + self.p_to_low)


@dataclass(frozen=True)
class CacheSolution:
    mvcs: frozenset[MvcId] = frozenset()
    svcs: frozenset[SvcId] = frozenset()
    capacity: float = math.inf

    def weight(self, catalog: Catalog) -> float:
        return total_weight(catalog, self.mvcs, self.svcs)

    def check(self, catalog: Catalog) -> None:
        if self.weight(catalog) > self.capacity * (1 + 1e-12):
            raise ValueError("cache solution exceeds capacity")


def total_weight(catalog: Catalog, mvcs, svcs) -> float:
    return sum(catalog.size(t) for t in mvcs) + sum(svc_size(catalog, f) for f in svcs)


def edge_tx_delay(catalog: Catalog, f: SvcId, rate: float) -> float:
    return svc_size(catalog, f) / rate


def backhaul_delay(catalog: Catalog, f: SvcId, cache: CacheSolution, params: DelayParams) -> float:
    if f in cache.svcs:
        return 0.0
    missing = sum(catalog.size(t) for t in catalog.members(f) if t not in cache.mvcs)
    return missing / params.backhaul_rate


def compute_delay(catalog: Catalog, f: SvcId, cache: CacheSolution, params: DelayParams) -> float:
    if f in cache.svcs:
        return 0.0
    return params.chi * sum(catalog.size(t) for t in catalog.members(f))


def option_delay(catalog: Catalog, f: SvcId, cache: CacheSolution, rate: float, params: DelayParams) -> float:
    """Delay of serving through SVC ``f``: Case 1 if cached, else Case 2."""
    return (
        backhaul_delay(catalog, f, cache, params)
        + compute_delay(catalog, f, cache, params)
        + edge_tx_delay(catalog, f, rate)
    )


def serving_svc(catalog: Catalog, d: Viewpoint, cache: CacheSolution, rate: float, params: DelayParams) -> SvcId:
    """SVC used to satisfy ``d``: the minimum-delay option over every SVC rendering it.

    Ties resolve to the smaller SVC size, then the lexicographically smaller id.
    """
    centers = catalog.renderers(d.tile)
    if not centers:
        raise ValueError(f"no SVC can render {d}")
    options = [SvcId(r, c, d.segment) for r, c in centers]
    return min(options, key=lambda f: (option_delay(catalog, f, cache, rate, params), svc_size(catalog, f), f))


def total_delay(catalog: Catalog, d: Viewpoint, cache: CacheSolution, rate: float, params: DelayParams) -> float:
    f = serving_svc(catalog, d, cache, rate, params)
    return option_delay(catalog, f, cache, rate, params)


def satisfaction_prob(
    catalog: Catalog, d: Viewpoint, cache: CacheSolution, params: DelayParams, channel: ChannelModel
) -> float:
    """P(T(d) < H) with the channel frozen for one delivery at its stationary law."""
    hi = total_delay(catalog, d, cache, channel.rate_high, params) < params.deadline
    lo = total_delay(catalog, d, cache, channel.rate_low, params) < params.deadline
    return channel.pi_high * hi + channel.pi_low * lo


def rendered_viewpoints(catalog: Catalog, cache: CacheSolution) -> set[Viewpoint]:
    """R(F): viewpoints rendered by cached SVCs or by SVCs whose MVCs are all cached."""
    out: set[Viewpoint] = set()
    for f in cache.svcs:
        out |= render_set(catalog, f)
    segments = {t.segment for t in cache.mvcs}
    for j in sorted(segments):
        for f in catalog.svc_ids(j):
            if f not in cache.svcs and all(t in cache.mvcs for t in catalog.members(f)):
                out |= render_set(catalog, f)
    return out


def objective_L(catalog: Catalog, cache: CacheSolution, params: DelayParams, channel: ChannelModel) -> float:
    return sum(
        catalog.p(d) * satisfaction_prob(catalog, d, cache, params, channel)
        for d in rendered_viewpoints(catalog, cache)
        if catalog.p(d) > 0
    )


def mean_delay(catalog: Catalog, cache: CacheSolution, params: DelayParams, channel: ChannelModel) -> float:
    """Popularity-weighted delay, averaging each request over the stationary channel law."""
    total = 0.0
    for d in catalog.viewpoints():
        p = catalog.p(d)
        if p == 0:
            continue
        t_hi = total_delay(catalog, d, cache, channel.rate_high, params)
        t_lo = total_delay(catalog, d, cache, channel.rate_low, params)
        total += p * (channel.pi_high * t_hi + channel.pi_low * t_lo)
    return total
