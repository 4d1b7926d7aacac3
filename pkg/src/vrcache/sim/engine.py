"""Slot-level simulator: cache placement, headset buffers, request prediction, scheduling
on the edge computing units and the learned Whittle-index agents.

:func:`prepare` builds everything that depends only on the training profile (catalog,
cache, epoch length); :func:`run` plays one seeded replication on a fresh test profile.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..catalog import Catalog, SvcId, Viewpoint, build_catalog, popularity_from_traces
from ..delay import CacheSolution, mean_delay, option_delay, serving_svc
from ..dynamics import Playback, TrajectoryStore, predict_desired, synth_store
from ..partition import AdmmParams, SubsetProber, allocate, make_subsets
from ..placement import (
    Evaluator, PlacementInstance, cache_size_search, mvc_only_fill, place, svc_only,
)
from ..quality import adapt_x0
from ..scheduler.agent import WiAgent
from ..scheduler.policies import BASELINES, AgentView, EpsilonSchedule, reward, schedule_slot
from .config import SimConfig

METRICS = (
    "hit_probability", "hit_probability_mean", "frame_missing_rate", "delay_satisfaction",
    "request_waiting_time", "deliveries", "obsolete_requests",
)


@dataclass
class World:
    """Replication-independent state for one configuration."""

    cfg: SimConfig
    catalog: Catalog
    cache: CacheSolution
    train: TrajectoryStore
    epoch_slots: int
    placement_value: float
    setup_seconds: float


@dataclass
class Metrics:
    hit_probability: float  # final moving-average value
    hit_probability_mean: float
    frame_missing_rate: float
    delay_satisfaction: float
    request_waiting_time: float  # slots from issue to scheduling
    deliveries: int
    obsolete_requests: int
    moving_average: np.ndarray = field(repr=False)
    extra: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in METRICS}


# --- setup ------------------------------------------------------------------------


def _place_subset(method: str, inst: PlacementInstance):
    if method == "place":
        return place(inst)
    if method == "listed":
        return place(inst, variant="listed")
    if method == "svc_only":
        return svc_only(inst)
    if method == "mvc_only":
        return mvc_only_fill(inst)
    return cache_size_search(inst)


def place_cache(cfg: SimConfig, catalog: Catalog) -> tuple[CacheSolution, float]:
    """Segment-wise placement; the budget is split by popularity mass or by ADMM."""
    params, channel = cfg.delay_params(), cfg.channel_model()
    full = PlacementInstance(catalog, params, channel, 0.0)
    ev_full = Evaluator(full)
    capacity = cfg.cache.capacity_fraction * float(ev_full.svc_w.sum())
    if cfg.cache.method == "none" or capacity <= 0:
        return CacheSolution(capacity=capacity), 0.0
    subsets = [s for s in make_subsets(catalog, 1) if s.popularity_mass > 0]
    if cfg.cache.partition == "admm":
        variant = "robust" if cfg.cache.method == "place" else "listed"
        prober = SubsetProber(catalog, params, channel, subsets, variant)
        res = allocate(subsets, capacity, prober, AdmmParams(seed=cfg.run.seed),
                       [prober.full_size(g) for g in range(len(subsets))])
        budgets = res.sizes
    else:
        mass = np.array([s.popularity_mass for s in subsets])
        budgets = capacity * mass / mass.sum()
    mvcs, svcs = set(), set()
    for s, b in zip(subsets, budgets):
        r = _place_subset(cfg.cache.method, PlacementInstance(catalog, params, channel, float(b), s.segments))
        mvcs |= r.cache.mvcs
        svcs |= r.cache.svcs
    cache = CacheSolution(frozenset(mvcs), frozenset(svcs), capacity)
    S, M = ev_full.from_solution(cache)
    return cache, ev_full.value(S, M)


def prepare(cfg: SimConfig) -> World:
    cfg.validate()
    t0 = time.perf_counter()
    grid = cfg.tile_grid()
    K = cfg.video.segments * cfg.seg_slots
    rng = np.random.default_rng([cfg.run.seed, cfg.users.train_seed_offset])
    traj_rng, size_rng = rng.spawn(2)
    train = synth_store(grid, cfg.users.count, K, cfg.users.move_prob, traj_rng, cfg.seg_slots)
    pop = popularity_from_traces(train, grid, cfg.video.segments)
    v = cfg.video
    catalog = build_catalog(grid, v.segments, pop, size_rng, cfg.quality_config(), v.alpha,
                            v.size_mean, v.size_sd, v.size_floor)
    cache, value = place_cache(cfg, catalog)
    phi = cfg.sched.epoch_slots
    if phi <= 0:
        t_bar = mean_delay(catalog, cache, cfg.delay_params(), cfg.channel_model())
        phi = max(1, math.ceil(t_bar / (max(cfg.sched.computing_units, 1) * cfg.delay.slot_len)))
    return World(cfg, catalog, cache, train, phi, value, time.perf_counter() - t0)


# --- one replication --------------------------------------------------------------


class _Server:
    """Delay lookups for the fixed cache, memoised per (viewpoint, channel state)."""

    def __init__(self, cfg: SimConfig, catalog: Catalog, cache: CacheSolution):
        self.catalog = catalog
        self.cache = cache
        self.params = cfg.delay_params()
        self.channel = cfg.channel_model()
        self._memo: dict = {}

    def with_catalog(self, catalog: Catalog) -> None:
        self.catalog = catalog
        self._memo.clear()

    def serve(self, d: Viewpoint, high: bool) -> tuple[SvcId, float]:
        key = (d, high)
        if key not in self._memo:
            rate = self.channel.rate_high if high else self.channel.rate_low
            f = serving_svc(self.catalog, d, self.cache, rate, self.params)
            self._memo[key] = (f, option_delay(self.catalog, f, self.cache, rate, self.params))
        return self._memo[key]


@dataclass
class HeadsetBuffer:
    """Delivered SVCs per segment and the tiles they can render."""

    shape: tuple[int, int]
    svcs: dict = field(default_factory=dict)  # segment -> list of SvcId
    coverage: dict = field(default_factory=dict)  # segment -> bool (rows, cols)

    def __len__(self) -> int:
        return sum(len(v) for v in self.svcs.values())

    def renders(self, row: int, col: int, segment: int) -> bool:
        cov = self.coverage.get(segment)
        return bool(cov is not None and cov[row, col])


def buffer_admit(buffer: HeadsetBuffer, svc: SvcId, catalog: Catalog, playing_segment: int,
                 capacity_policy: str = "evict_played") -> HeadsetBuffer:
    """Append a delivered SVC; ``evict_played`` drops SVCs of segments already played.

    Nothing is evicted within a segment.
    """
    if capacity_policy not in ("evict_played", "keep_all"):
        raise ValueError(f"unknown capacity policy {capacity_policy!r}")
    if capacity_policy == "evict_played":
        evict_played(buffer, playing_segment)
        if svc.segment < playing_segment:
            return buffer
    buffer.svcs.setdefault(svc.segment, []).append(svc)
    cov = buffer.coverage.setdefault(svc.segment, np.zeros(buffer.shape, dtype=bool))
    for t in catalog.render_tiles(svc.tile):
        cov[t] = True
    return buffer


def evict_played(buffer: HeadsetBuffer, playing_segment: int) -> None:
    for seg in [s for s in buffer.svcs if s < playing_segment]:
        del buffer.svcs[seg]
        buffer.coverage.pop(seg, None)


@dataclass
class _User:
    traj: np.ndarray
    high: bool
    buffer: HeadsetBuffer
    inflight: list = field(default_factory=list)  # (arrival slot, svc)
    pending: tuple | None = None  # (viewpoint, deadline slot, issue slot)
    epoch_x: np.ndarray | None = None
    epoch_a: int = 0
    epoch_r: float = 0.0


class Featurizer:
    """Local observation of one headset for the index and Q networks."""

    def __init__(self, cfg: SimConfig, server: _Server):
        self.cfg = cfg
        self.server = server
        self.grid = cfg.tile_grid()
        self.kind = cfg.sched.featurizer
        g = self.grid
        self.n = 9 + (2 * g.rows * g.cols if self.kind == "tilemap" else 0)

    def __call__(self, u: _User, k: int) -> np.ndarray:
        cfg, g = self.cfg, self.grid
        L = cfg.seg_slots
        r, c, j = (int(x) for x in u.traj[k])
        x = np.zeros(self.n)
        x[0] = 1.0
        if u.pending is not None:
            d, deadline, issued = u.pending
            _, t = self.server.serve(d, u.high)
            x[1] = 1.0
            x[2] = (deadline - k) / L
            x[3] = math.ceil(t / cfg.delay.slot_len) / 10.0
            x[4] = float(self.server.serve(d, True)[0] in self.server.cache.svcs)
            x[5] = (k - issued) / L
        x[6] = float(u.high)
        cov = u.buffer.coverage.get(j)
        if cov is not None:
            rows = np.clip(np.arange(r - 1, r + 2), 0, g.rows - 1)
            cols = np.arange(c - 1, c + 2) % g.cols
            x[7] = cov[np.ix_(rows, cols)].mean()
        lo = max(0, k - cfg.predictor.history_len)
        if k > lo:
            h = u.traj[lo:k + 1, :2]
            dc = (np.diff(h[:, 1]) + g.cols // 2) % g.cols - g.cols // 2
            x[8] = (np.abs(np.diff(h[:, 0])).sum() + np.abs(dc).sum()) / (k - lo)
        if self.kind == "tilemap":
            n = g.rows * g.cols
            x[9 + r * g.cols + c] = 1.0
            if cov is not None:
                x[9 + n:] = cov.ravel()
        return x


def _hindsight(cfg, catalog, f: SvcId, traj: np.ndarray, k: int, occ: int, kappa: float, phi: int) -> float:
    """Discounted count of future slots the delivered SVC renders once it has arrived."""
    horizon = min(len(traj) - k, cfg.seg_slots + phi)
    render = catalog.render_tiles(f.tile)
    fut = traj[k:k + horizon]
    rendered = np.array([
        j >= occ and int(s) == f.segment and (int(rr), int(cc)) in render
        for j, (rr, cc, s) in enumerate(fut)
    ], dtype=bool)
    return reward(rendered, 1, kappa, phi)


def _play(
    world: World, store: TrajectoryStore, rng: np.random.Generator, policy: str,
    agents: list[WiAgent] | None, learn: bool, eps: EpsilonSchedule | None,
) -> dict:
    cfg = world.cfg
    grid = cfg.tile_grid()
    L = cfg.seg_slots
    K = min(cfg.total_slots, min(len(a) for a in store.users.values()))
    phi = world.epoch_slots
    kappa = cfg.sched.discount
    clock = Playback(L, cfg.video.segments)
    pcfg = cfg.predictor_config()
    catalog = world.catalog
    server = _Server(cfg, catalog, world.cache)
    feat = Featurizer(cfg, server) if agents else None
    model = cfg.channel_model()
    ch_rng, pol_rng = rng.spawn(2)
    users = [
        _User(store.users[u], bool(ch_rng.random() < model.pi_high), HeadsetBuffer((grid.rows, grid.cols)))
        for u in sorted(store.users)
    ]
    U = len(users)
    baseline = BASELINES[policy]() if policy in BASELINES else None
    units_free = np.zeros(cfg.sched.computing_units, dtype=np.int64)
    hits = np.zeros(K)
    deliveries = satisfied = obsolete = requests = 0
    waits: list[int] = []
    x0 = cfg.video.x0
    window_hits = window_total = 0
    qwin = cfg.quality.window_slots or L

    for k in range(K):
        # arrivals, playback and buffer eviction
        for u in users:
            r, c, j = (int(x) for x in u.traj[k])
            if u.inflight:
                still = []
                for arr, f in u.inflight:
                    if arr <= k:
                        buffer_admit(u.buffer, f, catalog, j)
                    else:
                        still.append((arr, f))
                u.inflight = still
            evict_played(u.buffer, j)
            hit = u.buffer.renders(r, c, j)
            hits[k] += hit
            window_hits += hit
            window_total += 1

        # learning transitions at epoch boundaries
        if agents is not None and k % phi == 0:
            for i, u in enumerate(users):
                x = feat(u, k)
                if learn and u.epoch_x is not None:
                    ag = agents[i % len(agents)]
                    ag.update_q(u.epoch_x, u.epoch_a, u.epoch_r, x)
                    ag.update_wi(u.epoch_x)
                u.epoch_x, u.epoch_a, u.epoch_r = x, 0, 0.0
            if eps is not None and learn:
                eps.step()

        # requests from the viewpoint predictor
        for u in users:
            r, c, j = (int(x) for x in u.traj[k])
            view = dict(u.buffer.coverage)
            for _, f in u.inflight:
                cv = view.get(f.segment)
                cv = np.zeros((grid.rows, grid.cols), dtype=bool) if cv is None else cv.copy()
                for t in catalog.render_tiles(f.tile):
                    cv[t] = True
                view[f.segment] = cv
            lo = max(0, k + 1 - pcfg.history_len)
            want = predict_desired(u.traj[lo:k + 1, :2], k, j, k % L, view, pcfg, grid, clock)
            if u.pending is not None and (want is None or want[0] != u.pending[0]):
                obsolete += 1
                u.pending = None
            if want is not None and u.pending is None:
                u.pending = (want[0], want[1], k)
                requests += 1

        # scheduling on the free computing units
        free = int((units_free <= k).sum()) if len(units_free) else 0
        if free:
            ids = [i for i, u in enumerate(users) if u.pending is not None]
            wis = np.zeros(len(ids))
            if agents and ids:
                X = np.array([feat(users[i], k) for i in ids])
                if len(agents) == 1:
                    wis = agents[0].w_net(X)
                else:
                    wis = np.array([agents[i % len(agents)].wi(x) for i, x in zip(ids, X)])
            views = [AgentView(i, True, float(wi), users[i].pending[1]) for i, wi in zip(ids, wis)]
            if views:
                if baseline is not None:
                    chosen = baseline.select(views, free, pol_rng)
                else:
                    chosen = schedule_slot(views, free, eps.epsilon if eps else 0.0, pol_rng)
                for i in chosen:
                    u = users[i]
                    d, deadline, issued = u.pending
                    f, t = server.serve(d, u.high)
                    occ = max(1, math.ceil(t / cfg.delay.slot_len - 1e-9))
                    unit = int(np.argmin(units_free))
                    units_free[unit] = k + occ
                    u.inflight.append((k + occ, f))
                    u.pending = None
                    deliveries += 1
                    satisfied += t < cfg.delay.deadline
                    waits.append(k - issued)
                    if agents is not None:
                        u.epoch_a = 1
                        u.epoch_r += _hindsight(cfg, catalog, f, u.traj, k, occ, kappa, phi)

        # channel transitions
        for u in users:
            uu = ch_rng.random()
            u.high = not (uu < model.p_to_low) if u.high else bool(uu < model.p_to_high)

        # layer-0 count controller
        if cfg.quality.adaptive and (k + 1) % qwin == 0:
            rate = 1.0 - window_hits / max(window_total, 1)
            new = adapt_x0(x0, rate, cfg.quality.miss_threshold, (grid.fov_size, cfg.video.x_total))
            new = max(new, cfg.video.x_total - new)
            if new != x0:
                x0 = new
                catalog = catalog.with_quality(type(catalog.quality)(cfg.video.x_total, x0))
                server.with_catalog(catalog)
            window_hits = window_total = 0

    per_slot = hits / U
    W = min(K, cfg.run.ma_window_epochs * phi)
    csum = np.concatenate([[0.0], np.cumsum(per_slot)])
    idx = np.arange(1, K + 1)
    start = np.maximum(0, idx - W)
    ma = (csum[idx] - csum[start]) / (idx - start)
    return dict(
        hit_probability=float(ma[-1]),
        hit_probability_mean=float(per_slot.mean()),
        frame_missing_rate=float(1.0 - per_slot.mean()),
        delay_satisfaction=float(satisfied / deliveries) if deliveries else float("nan"),
        request_waiting_time=float(np.mean(waits)) if waits else float("nan"),
        deliveries=int(deliveries),
        obsolete_requests=int(obsolete),
        moving_average=ma,
        final_x0=x0,
        requests=int(requests),
        hits=int(hits.sum()),
        played=int(K * U),
    )


def make_agents(world: World, rng: np.random.Generator) -> list[WiAgent]:
    cfg = world.cfg
    hyper = cfg.hyper(world.epoch_slots)
    n = Featurizer(cfg, _Server(cfg, world.catalog, world.cache)).n
    count = 1 if cfg.sched.shared_agent else cfg.users.count
    return [WiAgent(n, hyper, r) for r in rng.spawn(count)]


def train_agents(world: World, rng: np.random.Generator) -> list[WiAgent]:
    """Learn the index networks on the training profile with epsilon-greedy exploration."""
    cfg = world.cfg
    init_rng, play_rng = rng.spawn(2)
    agents = make_agents(world, init_rng)
    s = cfg.sched
    eps = EpsilonSchedule(s.epsilon, s.eps_min, s.eps_attn)
    for r in play_rng.spawn(s.train_passes):
        _play(world, world.train, r, "wi", agents, True, eps)
    return agents


def run(cfg: SimConfig, world: World | None = None, seed: int | None = None,
        agents: list[WiAgent] | None = None) -> Metrics:
    """One replication on a fresh test profile; ``seed`` defaults to ``cfg.run.seed``."""
    world = world or prepare(cfg)
    if world.cfg != cfg:
        raise ValueError("world was prepared for a different configuration")
    seed = cfg.run.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    traj_rng, train_rng, play_rng = rng.spawn(3)
    K = cfg.video.segments * cfg.seg_slots
    test = synth_store(cfg.tile_grid(), cfg.users.count, K, cfg.users.move_prob, traj_rng, cfg.seg_slots)
    t0 = time.perf_counter()
    if cfg.sched.policy == "wi" and agents is None:
        agents = train_agents(world, train_rng)
    out = _play(world, test, play_rng, cfg.sched.policy, agents if cfg.sched.policy == "wi" else None,
                False, None)
    ma = out.pop("moving_average")
    extra = dict(final_x0=out.pop("final_x0"), requests=out.pop("requests"), hits=out.pop("hits"),
                 played=out.pop("played"), epoch_slots=world.epoch_slots,
                 placement_value=world.placement_value, seconds=time.perf_counter() - t0)
    return Metrics(moving_average=ma, extra=extra, **out)
