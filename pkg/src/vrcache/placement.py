"""Offline content placement: greedy MVC fill, MVC-to-SVC replacement, SVC-only fill,
the benchmark policies and an exhaustive oracle.

All algorithms run on an :class:`Evaluator`, which indexes the candidate SVCs and MVCs
of an instance into dense arrays so the coverage objective is a few numpy reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .catalog import Catalog, MvcId, SvcId, Viewpoint, render_set, svc_size
from .delay import CacheSolution, ChannelModel, DelayParams

_ROUND = 12


@dataclass(frozen=True, eq=False)
class PlacementInstance:
    catalog: Catalog
    params: DelayParams
    channel: ChannelModel
    capacity: float
    segments: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")


@dataclass
class PlacementResult:
    cache: CacheSolution
    objective: float
    phase_trace: list[tuple[str, str, float]] = field(default_factory=list)


class Evaluator:
    """Dense view of an instance; states are ``(S, M)`` boolean masks."""

    def __init__(self, inst: PlacementInstance):
        self.inst = inst
        cat = inst.catalog
        segs = range(cat.segments) if inst.segments is None else inst.segments
        pop = cat.popularity
        views: list[Viewpoint] = [
            Viewpoint(r, c, j)
            for j in segs
            for r, c in zip(*np.nonzero(pop[j]))
        ]
        views = sorted(Viewpoint(int(v.row), int(v.col), int(v.segment)) for v in views)
        self.views = views
        self.p = np.array([cat.p(v) for v in views])
        vidx = {v: i for i, v in enumerate(views)}

        cands: set[SvcId] = set()
        for v in views:
            cands.update(SvcId(r, c, v.segment) for r, c in cat.renderers(v.tile))
        self.svcs: list[SvcId] = sorted(cands)
        self.svc_index = {f: i for i, f in enumerate(self.svcs)}
        n = len(self.svcs)

        mvcs: set[MvcId] = set()
        members = [cat.members(f) for f in self.svcs]
        for m in members:
            mvcs.update(m)
        self.mvcs: list[MvcId] = sorted(mvcs)
        self.mvc_index = {t: i for i, t in enumerate(self.mvcs)}
        self.mvc_w = np.array([cat.size(t) for t in self.mvcs])

        self.group = np.zeros((n, len(self.mvcs)), dtype=bool)
        self.render = np.zeros((n, len(views)), dtype=bool)
        for i, f in enumerate(self.svcs):
            self.group[i, [self.mvc_index[t] for t in members[i]]] = True
            for v in render_set(cat, f):
                if v in vidx:
                    self.render[i, vidx[v]] = True
        self.group_f = self.group.astype(float)
        self.group_w = self.group_f * self.mvc_w
        self.bits = self.group_w.sum(axis=1)
        self.svc_w = np.array([svc_size(cat, f) for f in self.svcs])

        prm, ch = inst.params, inst.channel
        self.rates = (ch.rate_high, ch.rate_low)
        self.pis = (ch.pi_high, ch.pi_low)
        self.case1 = [self.svc_w / r for r in self.rates]
        self.case2 = [prm.chi * self.bits + self.svc_w / r for r in self.rates]
        self.backhaul = prm.backhaul_rate
        self.deadline = prm.deadline
        self._inf = np.where(self.render, 0.0, np.inf)

    @property
    def n(self) -> int:
        return len(self.svcs)

    def empty(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.n, dtype=bool), np.zeros(len(self.mvcs), dtype=bool)

    def weight(self, S: np.ndarray, M: np.ndarray) -> float:
        return float(self.svc_w[S].sum() + self.mvc_w[M].sum())

    def complete(self, M: np.ndarray) -> np.ndarray:
        return self.group_f @ (~M) == 0

    def value(self, S: np.ndarray, M: np.ndarray) -> float:
        """Coverage objective L(F) for F = (S, M)."""
        open_ = S | self.complete(M)
        if not open_.any():
            return 0.0
        covered = self.render[open_].any(axis=0)
        if not covered.any():
            return 0.0
        missing = self.group_w @ (~M)
        sat = np.zeros(len(self.views))
        for r in range(2):
            opt = self.case2[r] + missing / self.backhaul
            opt = np.where(S, np.minimum(opt, self.case1[r]), opt)
            t = (self._inf[:, covered] + opt[:, None]).min(axis=0)
            sat[covered] += self.pis[r] * (t < self.deadline)
        return float(self.p @ sat)

    def to_solution(self, S: np.ndarray, M: np.ndarray, capacity: float) -> CacheSolution:
        return CacheSolution(
            mvcs=frozenset(self.mvcs[i] for i in np.nonzero(M)[0]),
            svcs=frozenset(self.svcs[i] for i in np.nonzero(S)[0]),
            capacity=capacity,
        )

    def from_solution(self, cache: CacheSolution) -> tuple[np.ndarray, np.ndarray]:
        S, M = self.empty()
        for f in cache.svcs:
            if f in self.svc_index:
                S[self.svc_index[f]] = True
        for t in cache.mvcs:
            if t in self.mvc_index:
                M[self.mvc_index[t]] = True
        return S, M

    def result(self, S, M, trace=None) -> PlacementResult:
        return PlacementResult(
            self.to_solution(S, M, self.inst.capacity), self.value(S, M), list(trace or [])
        )


def cache_weight(catalog: Catalog, mvcs: Iterable[MvcId], svcs: Iterable[SvcId]) -> float:
    return sum(catalog.size(t) for t in mvcs) + sum(svc_size(catalog, f) for f in svcs)


def marginal_index(ev: Evaluator, candidate: tuple[np.ndarray, np.ndarray], base: tuple[np.ndarray, np.ndarray]) -> float:
    """l(C | F) = L(C u F) - L(F) on evaluator masks."""
    S, M = base
    cS, cM = candidate
    return ev.value(S | cS, M | cM) - ev.value(S, M)


def _best(scored):
    """Pick max score; ties go to the first (lexicographically smallest) entry."""
    best = None
    for key, item in scored:
        k = round(key, _ROUND)
        if best is None or k > best[0]:
            best = (k, item)
    return best


def greedy_mvc_fill(
    inst: PlacementInstance, ev: Evaluator | None = None, start=None, budget: float | None = None,
    trace: list | None = None, skip_unfit: bool = False,
) -> np.ndarray:
    """Greedy MVC fill: add whole MVC groups C(f*) by marginal index until the best one no longer fits.

    ``budget`` bounds the MVC bytes (defaults to the capacity left after ``start``'s SVCs).
    Stops early once no group increases the objective. With ``skip_unfit`` only groups
    that still fit are ranked, so the fill continues past an oversized best group.
    """
    ev = ev or Evaluator(inst)
    S, M = start if start is not None else ev.empty()
    S, M = S.copy(), M.copy()
    if budget is None:
        budget = inst.capacity - float(ev.svc_w[S].sum())
    base = ev.value(S, M)
    while ev.mvc_w[M].sum() <= budget:
        scored = []
        for i in range(ev.n):
            if ev.group[i].any() and not (ev.group[i] <= M).all():
                if skip_unfit and ev.mvc_w[M | ev.group[i]].sum() > budget:
                    continue
                scored.append((ev.value(S, M | ev.group[i]) - base, i))
        pick = _best(scored)
        if pick is None or pick[0] <= 0:
            break
        gain, i = pick
        newM = M | ev.group[i]
        if ev.mvc_w[newM].sum() <= budget:
            M = newM
            base += gain
            if trace is not None:
                trace.append(("mvc_fill", f"add-group {tuple(ev.svcs[i])}", gain))
        else:
            break
    return M


def svc_only_fill(
    inst: PlacementInstance, ev: Evaluator | None = None, start_svcs: np.ndarray | None = None,
    budget: float | None = None, trace: list | None = None, skip_unfit: bool = False,
) -> np.ndarray:
    """Greedy SVC fill by l(f | F_B); stops at the first best SVC that does not fit
    unless ``skip_unfit``, which ranks only the SVCs that fit."""
    ev = ev or Evaluator(inst)
    S = np.zeros(ev.n, dtype=bool) if start_svcs is None else start_svcs.copy()
    M = np.zeros(len(ev.mvcs), dtype=bool)
    budget = inst.capacity if budget is None else budget
    base = ev.value(S, M)
    while ev.svc_w[S].sum() <= budget:
        scored = []
        used = ev.svc_w[S].sum()
        for i in np.nonzero(~S)[0]:
            if skip_unfit and used + ev.svc_w[i] > budget:
                continue
            S[i] = True
            scored.append((ev.value(S, M) - base, int(i)))
            S[i] = False
        pick = _best(scored)
        if pick is None or pick[0] <= 0:
            break
        gain, i = pick
        if ev.svc_w[S].sum() + ev.svc_w[i] <= budget:
            S[i] = True
            base += gain
            if trace is not None:
                trace.append(("svc_fill", f"add-svc {tuple(ev.svcs[i])}", gain))
        else:
            break
    return S


def _evict_until_fits(ev: Evaluator, S, M, add_S, add_M, first_group, capacity):
    """Grow the eviction set D until the addition fits.

    Returns the new ``(S, M)`` or None when even evicting every group is not enough.
    """
    D = np.zeros_like(M) if first_group is None else ev.group[first_group].copy()

    def fits(D):
        M2 = (M & ~D) | add_M
        return ev.weight(S | add_S, M2) <= capacity

    while not fits(D):
        scored = []
        for i in range(ev.n):
            g = ev.group[i]
            if g.any() and (g <= M).all() and not (g <= D).all():
                scored.append((ev.value(S, M & ~(D | g)), i))
        pick = _best(scored)
        if pick is None:
            return None
        D = D | ev.group[pick[1]]
    return S | add_S, (M & ~D) | add_M


def replace_with_svcs(
    inst: PlacementInstance, M: np.ndarray | None = None, ev: Evaluator | None = None,
    trace: list | None = None, max_iter: int = 10_000, score: str = "net",
    skip_unfit: bool = False, max_stall: int = 10,
) -> PlacementResult:
    """Replacement phase: swap cached MVC groups for SVCs (or other groups) while L does not decrease.

    ``score="index"`` ranks a pair (f1, f2) by the marginal index l(f1 | F minus C(f2));
    ``score="net"`` ranks it by the objective after the swap, L(F minus C(f2) plus f1).
    """
    ev = ev or Evaluator(inst)
    trace = [] if trace is None else trace
    if M is None:
        M = greedy_mvc_fill(inst, ev, trace=trace, skip_unfit=skip_unfit)
    S = np.zeros(ev.n, dtype=bool)
    cur = ev.value(S, M)
    stall = 0
    seen = {(S.tobytes(), M.tobytes())}
    cap = inst.capacity
    for _ in range(max_iter):
        evictable = [None] + [
            i for i in range(ev.n) if ev.group[i].any() and (ev.group[i] <= M).all()
        ]
        scored = []
        for j in evictable:
            M_del = M if j is None else M & ~ev.group[j]
            base = ev.value(S, M_del) if score == "index" else cur
            for i in range(ev.n):
                if not S[i]:
                    S[i] = True
                    scored.append((ev.value(S, M_del) - base, (i, j, "svc")))
                    S[i] = False
                if not (ev.group[i] <= M_del).all():
                    scored.append((ev.value(S, M_del | ev.group[i]) - base, (i, j, "group")))
        # order: gain desc, then f1 id, f2 id (None first), SVC form before group form
        scored.sort(key=lambda s: (-round(s[0], _ROUND), s[1][0], -1 if s[1][1] is None else s[1][1], s[1][2] != "svc"))
        moved = None
        for _gain, (i, j, form) in scored:
            add_S = np.zeros_like(S)
            add_M = np.zeros_like(M)
            if form == "svc":
                add_S[i] = True
            else:
                add_M = ev.group[i].copy()
            nxt = _evict_until_fits(ev, S, M, add_S, add_M, j, cap)
            # re-adding what was just evicted (or revisiting a state) is not a move
            if nxt is not None and (nxt[0].tobytes(), nxt[1].tobytes()) not in seen:
                moved = (nxt, i, j, form)
                break
        if moved is None:
            break
        (S2, M2), i, j, form = moved
        new = ev.value(S2, M2)
        if new < cur - 1e-15:
            break
        # ties are accepted, but only max_stall of them in a row
        stall = stall + 1 if new <= cur + 1e-15 else 0
        if stall > max_stall:
            break
        seen.add((S2.tobytes(), M2.tobytes()))
        evicted = "" if j is None else f" evict {tuple(ev.svcs[j])}"
        trace.append(("replace", f"add-{form} {tuple(ev.svcs[i])}{evicted}", new - cur))
        S, M, cur = S2, M2, new
    return ev.result(S, M, trace)


def _place_listed(inst, ev, trace, skip_unfit):
    res_a = replace_with_svcs(inst, ev=ev, trace=trace, skip_unfit=skip_unfit)
    S_a, M_a = ev.from_solution(res_a.cache)
    omega_a = res_a.objective

    fills = []
    for start in (S_a, None):
        sub: list = []
        S_b = svc_only_fill(inst, ev, start_svcs=start, trace=sub, skip_unfit=skip_unfit)
        fills.append((ev.value(S_b, np.zeros_like(M_a)), S_b, sub))
    fills.sort(key=lambda x: -x[0])  # stable: seeded refill wins ties
    val_b, S_b, sub = fills[0]
    trace.extend(sub)
    if val_b < omega_a:
        trace.append(("select", "F_A", 0.0))
        return S_a, M_a
    trace.append(("select", "F_B", val_b - omega_a))
    return S_b, np.zeros_like(M_a)


def local_search(
    ev: Evaluator, S: np.ndarray, M: np.ndarray, capacity: float, trace: list | None = None,
    max_rounds: int = 1000,
) -> tuple[np.ndarray, np.ndarray]:
    """Best-improvement search: drop at most one cached item, then add one or two items.

    Items are single SVCs and whole MVC groups. Only strict improvements are taken.
    """
    cur = ev.value(S, M)
    groups = [i for i in range(ev.n) if ev.group[i].any()]
    items = [("svc", i) for i in range(ev.n)] + [("group", i) for i in groups]

    def apply(S1, M1, item):
        kind, i = item
        if kind == "svc":
            return (None if S1[i] else _with(S1, i, True)), M1
        if (ev.group[i] <= M1).all():
            return None, M1
        return S1, M1 | ev.group[i]

    def name(item):
        return f"add-{item[0]} {tuple(ev.svcs[item[1]])}"

    for _ in range(max_rounds):
        drops = [(S, M, [])]
        drops += [(_with(S, i, False), M, [f"drop-svc {tuple(ev.svcs[i])}"]) for i in np.nonzero(S)[0]]
        drops += [
            (S, M & ~ev.group[i], [f"drop-group {tuple(ev.svcs[i])}"])
            for i in groups if (ev.group[i] <= M).all()
        ]
        best = None
        for S1, M1, labels in drops:
            for a, first in enumerate(items):
                S2, M2 = apply(S1, M1, first)
                if S2 is None or ev.weight(S2, M2) > capacity:
                    continue
                val = ev.value(S2, M2)
                if val > cur + 1e-12 and (best is None or val > best[0] + 1e-12):
                    best = (val, S2, M2, labels + [name(first)])
                for second in items[a + 1:]:
                    S3, M3 = apply(S2, M2, second)
                    if S3 is None or ev.weight(S3, M3) > capacity:
                        continue
                    val = ev.value(S3, M3)
                    if val > cur + 1e-12 and (best is None or val > best[0] + 1e-12):
                        best = (val, S3, M3, labels + [name(first), name(second)])
        if best is None:
            break
        val, S, M, labels = best
        if trace is not None:
            trace.append(("local", " ".join(labels), val - cur))
        cur = val
    return S, M


def _with(S: np.ndarray, i: int, flag: bool) -> np.ndarray:
    out = S.copy()
    out[i] = flag
    return out


def ratio_fill(
    ev: Evaluator, capacity: float, trace: list | None = None, start=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy over SVC and group items by objective gain per added bit, fitting items only."""
    S, M = ev.empty() if start is None else start
    cur = ev.value(S, M)
    while True:
        used = ev.weight(S, M)
        best = None
        for i in range(ev.n):
            opts = [] if S[i] else [(_with(S, i, True), M, "svc")]
            if ev.group[i].any() and not (ev.group[i] <= M).all():
                opts.append((S, M | ev.group[i], "group"))
            for S2, M2, kind in opts:
                w = ev.weight(S2, M2)
                if w > capacity:
                    continue
                gain = ev.value(S2, M2) - cur
                if gain <= 1e-15:
                    continue
                ratio = gain / (w - used)
                if best is None or ratio > best[0] * (1 + 1e-12):
                    best = (ratio, S2, M2, f"add-{kind} {tuple(ev.svcs[i])}")
        if best is None:
            return S, M
        _, S, M, label = best
        new = ev.value(S, M)
        if trace is not None:
            trace.append(("ratio_fill", label, new - cur))
        cur = new


def place(inst: PlacementInstance, ev: Evaluator | None = None, variant: str = "robust") -> PlacementResult:
    """Keep the better of the mixed solution F_A and the SVC-only refill F_B.

    F_B is refilled both from F_A's SVCs and from an empty cache;
    the better refill competes with F_A.

    ``variant="listed"`` runs exactly that pipeline. ``variant="robust"`` (default) also
    runs it with fills that skip oversized candidates instead of stopping, adds a
    gain-per-bit fill as a third start, polishes every start with :func:`local_search`
    and keeps the best.
    """
    if variant not in ("listed", "robust"):
        raise ValueError(f"unknown placement variant {variant!r}")
    ev = ev or Evaluator(inst)
    trace: list = []
    S, M = _place_listed(inst, ev, trace, skip_unfit=False)
    if variant == "listed":
        return ev.result(S, M, trace)
    starts = [("listed", S, M, trace)]
    sub: list = []
    S2, M2 = _place_listed(inst, ev, sub, skip_unfit=True)
    starts.append(("skip-unfit", S2, M2, sub))
    # gain-per-bit fills seeded with each single item; the best one is polished
    seeds = [ev.empty()]
    for i in range(ev.n):
        S0, M0 = ev.empty()
        seeds.append((_with(S0, i, True), M0))
        if ev.group[i].any():
            seeds.append((S0, ev.group[i].copy()))
    fills = []
    for seed in seeds:
        if ev.weight(*seed) <= inst.capacity:
            S3, M3 = ratio_fill(ev, inst.capacity, start=seed)
            fills.append((ev.value(S3, M3), S3, M3))
    val3, S3, M3 = max(fills, key=lambda x: x[0])  # first maximum wins ties
    starts.append(("ratio", S3, M3, [("ratio_fill", "best seeded fill", val3)]))
    best = None
    for label, S, M, tr in starts:
        tr = list(tr)
        S, M = local_search(ev, S, M, inst.capacity, tr)
        val = ev.value(S, M)
        if best is None or val > best[0] + 1e-12:
            best = (val, S, M, tr + [("select", label, val)])
    _, S, M, tr = best
    return ev.result(S, M, tr)


def mvc_only_fill(inst: PlacementInstance, ev: Evaluator | None = None) -> PlacementResult:
    ev = ev or Evaluator(inst)
    trace: list = []
    M = greedy_mvc_fill(inst, ev, trace=trace)
    return ev.result(np.zeros(ev.n, dtype=bool), M, trace)


def svc_only(inst: PlacementInstance, ev: Evaluator | None = None) -> PlacementResult:
    ev = ev or Evaluator(inst)
    trace: list = []
    S = svc_only_fill(inst, ev, trace=trace)
    return ev.result(S, np.zeros(len(ev.mvcs), dtype=bool), trace)


def cache_size_search(
    inst: PlacementInstance, grid: Sequence[float] = tuple(np.round(np.linspace(0, 1, 11), 10)),
    ev: Evaluator | None = None,
) -> PlacementResult:
    """Benchmark: SVC greedy into w*C then MVC greedy into (1-w)*C, best w on ``grid``."""
    ev = ev or Evaluator(inst)
    best = None
    for w in grid:
        S = svc_only_fill(inst, ev, budget=w * inst.capacity)
        M = greedy_mvc_fill(inst, ev, start=(S, np.zeros(len(ev.mvcs), dtype=bool)),
                            budget=(1 - w) * inst.capacity)
        val = ev.value(S, M)
        if best is None or val > best[0]:
            best = (val, S, M, w)
    val, S, M, w = best
    return ev.result(S, M, [("omega", f"{w:g}", val)])


def omega_profile(inst: PlacementInstance, grid: Sequence[float], ev: Evaluator | None = None) -> list[float]:
    """Objective of the w-split benchmark at every grid point."""
    ev = ev or Evaluator(inst)
    out = []
    for w in grid:
        S = svc_only_fill(inst, ev, budget=w * inst.capacity)
        M = greedy_mvc_fill(inst, ev, start=(S, np.zeros(len(ev.mvcs), dtype=bool)),
                            budget=(1 - w) * inst.capacity)
        out.append(ev.value(S, M))
    return out


def brute_force_optimal(
    inst: PlacementInstance, limit: int = 14, mvc_groups_only: bool = True, ev: Evaluator | None = None,
) -> PlacementResult:
    """Exact maximiser by branch and bound.

    With ``mvc_groups_only`` each candidate SVC is skipped, cached as an SVC, or has its
    MVC group cached; otherwise every MVC is an independent item (tiny universes only).
    """
    ev = ev or Evaluator(inst)
    if ev.n > limit:
        raise ValueError(f"universe of {ev.n} SVC candidates exceeds the limit {limit}")
    cap = inst.capacity
    n, m = ev.n, len(ev.mvcs)
    if mvc_groups_only:
        items = [("svc", i) for i in range(n)] + [("group", i) for i in range(n)]
    else:
        if n + m > 2 * limit + 8:
            raise ValueError("unrestricted MVC enumeration limited to tiny universes")
        items = [("svc", i) for i in range(n)] + [("mvc", k) for k in range(m)]

    def add(S, M, item):
        kind, i = item
        S, M = S.copy(), M.copy()
        if kind == "svc":
            S[i] = True
        elif kind == "group":
            M |= ev.group[i]
        else:
            M[i] = True
        return S, M

    # suffix unions for the optimistic bound
    suffix = []
    S_all, M_all = ev.empty()
    for item in reversed(items):
        S_all, M_all = add(S_all, M_all, item)
        suffix.append((S_all, M_all))
    suffix.reverse()
    suffix.append(ev.empty())

    S0, M0 = ev.empty()
    best = [ev.value(S0, M0), S0, M0]

    def dfs(k, S, M):
        val = ev.value(S, M)
        if val > best[0] + 1e-15:
            best[:] = [val, S, M]
        if k == len(items):
            return
        uS, uM = suffix[k]
        if ev.value(S | uS, M | uM) <= best[0] + 1e-15:
            return
        for j in range(k, len(items)):
            S2, M2 = add(S, M, items[j])
            if (S2 == S).all() and (M2 == M).all():
                continue
            if ev.weight(S2, M2) <= cap:
                dfs(j + 1, S2, M2)

    dfs(0, S0, M0)
    return ev.result(best[1], best[2], [("brute_force", "optimum", best[0])])


# --- persistence ------------------------------------------------------------------


def format_cache(cache: CacheSolution) -> str:
    lines = [f"# capacity={cache.capacity!r}"]
    lines += sorted(f"MVC {t.row} {t.col} {t.segment} {t.layer}" for t in cache.mvcs)
    lines += sorted(f"SVC {f.row} {f.col} {f.segment}" for f in cache.svcs)
    return "\n".join(lines) + "\n"


def parse_cache(text: str, capacity: float | None = None) -> CacheSolution:
    mvcs, svcs = set(), set()
    cap = math.inf
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# capacity="):
                cap = float(line.split("=", 1)[1])
            continue
        kind, *nums = line.split()
        try:
            vals = [int(x) for x in nums]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer field in {line!r}") from None
        if kind == "MVC" and len(vals) == 4:
            mvcs.add(MvcId(*vals))
        elif kind == "SVC" and len(vals) == 3:
            svcs.add(SvcId(*vals))
        else:
            raise ValueError(f"line {lineno}: malformed entry {line!r}")
    return CacheSolution(frozenset(mvcs), frozenset(svcs), cap if capacity is None else capacity)


def save_cache(cache: CacheSolution, path: str | Path) -> None:
    Path(path).write_text(format_cache(cache))


def load_cache(path: str | Path, capacity: float | None = None) -> CacheSolution:
    return parse_cache(Path(path).read_text(), capacity)
