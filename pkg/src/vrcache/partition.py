"""Cache budget split across VC subsets by relaxed heavy-ball ADMM on piecewise-linear
surrogates of each subset's satisfaction curve.

Internally every size is a fraction of the total budget ``C``; results are reported in bits.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .catalog import Catalog
from .delay import ChannelModel, DelayParams
from .placement import Evaluator, PlacementInstance, place


@dataclass(frozen=True)
class SubsetSpec:
    id: int
    segments: tuple[int, ...]
    popularity_mass: float


def make_subsets(catalog: Catalog, segments_per_subset: int = 1) -> list[SubsetSpec]:
    """Consecutive segment groups; ids start at 1."""
    if segments_per_subset < 1:
        raise ValueError("segments_per_subset must be >= 1")
    out = []
    for g, lo in enumerate(range(0, catalog.segments, segments_per_subset), 1):
        segs = tuple(range(lo, min(lo + segments_per_subset, catalog.segments)))
        out.append(SubsetSpec(g, segs, float(catalog.popularity[list(segs)].sum())))
    return out


def check_subsets(subsets: Sequence[SubsetSpec], n_segments: int | None = None) -> None:
    segs = [j for s in subsets for j in s.segments]
    if len(segs) != len(set(segs)):
        raise ValueError("subsets overlap")
    if n_segments is not None and sorted(segs) != list(range(n_segments)):
        raise ValueError("subsets do not partition the segment axis")
    if abs(sum(s.popularity_mass for s in subsets) - 1.0) > 1e-9:
        raise ValueError("subset popularity masses must sum to 1")


@dataclass
class PwlCurve:
    """Piecewise-linear non-decreasing curve through ``(size, value)`` breakpoints.

    Flat beyond the last breakpoint; the first breakpoint is ``(0, 0)``.
    """

    sizes: list[float] = field(default_factory=lambda: [0.0])
    values: list[float] = field(default_factory=lambda: [0.0])

    def __post_init__(self):
        if not self.sizes or self.sizes[0] != 0.0 or self.values[0] != 0.0:
            raise ValueError("curve must start at (0, 0)")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("breakpoint sizes must be strictly increasing")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("curve values must be non-decreasing")

    def __call__(self, c: float) -> float:
        c = max(c, 0.0)
        return float(np.interp(c, self.sizes, self.values))

    def pieces(self):
        """Yield ``(lo, hi, slope, intercept)``; the last piece runs to infinity with slope 0."""
        s, v = self.sizes, self.values
        for i in range(len(s) - 1):
            k = (v[i + 1] - v[i]) / (s[i + 1] - s[i])
            yield s[i], s[i + 1], k, v[i] - k * s[i]
        yield s[-1], math.inf, 0.0, v[-1]

    def copy(self) -> "PwlCurve":
        return PwlCurve(list(self.sizes), list(self.values))


def refine_curve(curve: PwlCurve, size: float, value: float, log: list | None = None) -> PwlCurve:
    """Insert the probe ``(size, value)`` between its neighbours C- and C+.

    Between C- and C+ the curve becomes the two chords through the new point and
    elsewhere it is unchanged. A probe below its left neighbour is clamped up to it; a
    probe above later breakpoints lifts them, since a larger budget can hold the same
    placement. Both repairs are appended to ``log``.
    """
    size = max(float(size), 0.0)
    out = curve.copy()
    s, v = out.sizes, out.values
    i = int(np.searchsorted(s, size))
    if i < len(s) and s[i] == size:
        if size == 0.0:
            return out  # the anchor stays at (0, 0)
        left = v[i - 1]
        s.pop(i)
        v.pop(i)
    else:
        left = v[i - 1]
    if value < left:
        if log is not None:
            log.append(("clamp-left", size, value, left))
        value = left
    s.insert(i, size)
    v.insert(i, value)
    for k in range(i + 1, len(v)):
        if v[k] < value:
            if log is not None:
                log.append(("lift-right", s[k], v[k], value))
            v[k] = value
    return out


@dataclass(frozen=True)
class AdmmParams:
    eps1: float = 0.8
    eps2: float = 0.85
    rho1: float = 0.3
    rho2: float = 0.3
    sigma0: float | None = None  # fraction of C; default 1/(4G)
    attn: float = 0.95
    max_iter: int = 200
    tol_lagrangian: float = 1e-6
    tol_sigma: float = 1e-3  # fraction of C
    seed: int = 0
    workers: int = 1
    init_points: int = 8  # probes per subset seeding the initial curve, up to its anchor

    def __post_init__(self):
        if self.rho1 <= 0 or self.rho2 <= 0:
            raise ValueError("penalties must be positive")
        if not (0 <= self.eps1 <= 1 and 0 <= self.eps2 <= 1):
            raise ValueError("relaxation factors must lie in [0, 1]")
        if self.init_points < 1:
            raise ValueError("init_points must be >= 1")
        if self.sigma0 is not None and self.sigma0 < 0:
            raise ValueError("sigma0 must be non-negative")


@dataclass
class AdmmState:
    """Iterate of the relaxed heavy-ball ADMM, all sizes as fractions of C."""

    c: np.ndarray
    z1: float
    z2: np.ndarray
    u1: float
    u2: np.ndarray
    u1_hat: float
    u2_hat: np.ndarray
    z1_hat: float
    z2_hat: np.ndarray
    rho1: float = 0.3
    rho2: float = 0.3
    eps1: float = 0.8
    eps2: float = 0.85
    sigma: float = 0.0
    attn: float = 0.95
    iteration: int = 0

    @classmethod
    def initial(cls, G: int, params: AdmmParams) -> "AdmmState":
        c = np.full(G, 1.0 / G)
        z = c.copy()
        sigma = 1.0 / (4 * G) if params.sigma0 is None else params.sigma0
        return cls(
            c=c, z1=0.0, z2=z, u1=0.0, u2=np.zeros(G), u1_hat=0.0, u2_hat=np.zeros(G),
            z1_hat=0.0, z2_hat=z.copy(), rho1=params.rho1, rho2=params.rho2,
            eps1=params.eps1, eps2=params.eps2, sigma=sigma, attn=params.attn,
        )

    @property
    def G(self) -> int:
        return len(self.c)

    def copy(self) -> "AdmmState":
        return replace(self, c=self.c.copy(), z2=self.z2.copy(), u2=self.u2.copy(),
                       u2_hat=self.u2_hat.copy(), z2_hat=self.z2_hat.copy())


def _coupling(state: AdmmState) -> float:
    """Residual of the budget coupling, mean(C_g) - C/G - z1 (C is 1 here)."""
    return float(state.c.mean()) - 1.0 / state.G - state.z1


def lagrangian(state: AdmmState, curves: Sequence[PwlCurve]) -> float:
    r1 = _coupling(state)
    r2 = state.c - state.z2
    return float(
        -sum(cv(c) for cv, c in zip(curves, state.c))
        + state.u1 * r1 + state.u2 @ r2
        + state.rho1 / 2 * r1 ** 2 + state.rho2 / 2 * (r2 @ r2)
    )


def _size_objective(state: AdmmState, g: int, curve: PwlCurve, c):
    """Subset-g size subproblem at ``c`` (scalar or array), others held at the last iterate."""
    G = state.G
    c = np.asarray(c, dtype=float)
    m = float(state.c.mean()) + (c - state.c[g]) / G - 1.0 / G - state.z1
    r2 = c - state.z2[g]
    p_hat = np.interp(np.maximum(c, 0.0), curve.sizes, curve.values)
    return -p_hat + state.u1 * m + state.u2[g] * r2 + state.rho1 / 2 * m * m + state.rho2 / 2 * r2 * r2


def size_argmin(state: AdmmState, g: int, curve: PwlCurve) -> float:
    """Exact minimiser over c >= 0 of the subset-g size subproblem.

    The objective is piecewise quadratic; each piece's vertex is clamped into the piece
    and compared with every breakpoint.
    """
    G = state.G
    A = float(state.c.mean()) - state.c[g] / G - 1.0 / G - state.z1
    curv = state.rho1 / G ** 2 + state.rho2
    s = np.asarray(curve.sizes)
    v = np.asarray(curve.values)
    slopes = np.append(np.diff(v) / np.diff(s), 0.0)
    lo = s
    hi = np.append(s[1:], np.inf)
    vert = (slopes - state.u1 / G - state.u2[g] - state.rho1 * A / G + state.rho2 * state.z2[g]) / curv
    cands = np.concatenate([[0.0], s, np.clip(vert, lo, hi)])
    vals = _size_objective(state, g, curve, cands)
    return float(cands[int(np.argmin(vals))])


def update_sizes(state: AdmmState, curves: Sequence[PwlCurve]) -> np.ndarray:
    """All subsets solve against the same previous iterate (Jacobi style)."""
    return np.array([size_argmin(state, g, cv) for g, cv in enumerate(curves)])


def update_duals(state: AdmmState) -> AdmmState:
    """Relaxed heavy-ball updates of z2, z1, u1, u2 and their extrapolated copies.

    ``state.c`` must already hold the new sizes. z1 mirrors z2 on the coupling and is
    projected onto z1 <= 0, which is what makes the coupling encode sum(C_g) <= C.
    """
    s = state.copy()
    G = s.G
    e1, e2 = s.eps1, s.eps2
    relaxed_c = e1 * s.c + (1 - e1) * state.z2_hat
    s.z2 = np.maximum(relaxed_c + state.u2_hat / s.rho2, 0.0)
    relaxed_m = e1 * (float(s.c.mean()) - 1.0 / G) + (1 - e1) * state.z1_hat
    s.z1 = min(relaxed_m + state.u1_hat / s.rho1, 0.0)
    s.u1 = state.u1_hat + s.rho1 * (relaxed_m - s.z1)
    s.u2 = state.u2_hat + s.rho2 * (relaxed_c - s.z2)
    s.u1_hat = s.u1 + e2 * (s.u1 - state.u1_hat)
    s.u2_hat = s.u2 + e2 * (s.u2 - state.u2_hat)
    s.z1_hat = s.z1 + e2 * (s.z1 - state.z1_hat)
    s.z2_hat = s.z2 + e2 * (s.z2 - state.z2_hat)
    return s


def project_budget(c: np.ndarray) -> np.ndarray:
    """Clamp to c >= 0 and scale down proportionally when the sum exceeds 1."""
    c = np.maximum(np.asarray(c, dtype=float), 0.0)
    tot = c.sum()
    if tot > 1.0:
        c = c / tot
        # guard the last ulp so the sum never exceeds the budget
        while c.sum() > 1.0:
            c = np.nextafter(c, 0.0)
    return c


# --- probing ----------------------------------------------------------------------

Probe = Callable[[int, float], float]  # (subset index, size in bits) -> satisfied mass


class SubsetProber:
    """P_g(C_g): run placement on subset g's segments at a given budget, memoised."""

    def __init__(self, catalog: Catalog, params: DelayParams, channel: ChannelModel,
                 subsets: Sequence[SubsetSpec], variant: str = "robust"):
        self.subsets = list(subsets)
        self.variant = variant
        self._insts = [PlacementInstance(catalog, params, channel, 0.0, s.segments) for s in subsets]
        self._evs = [Evaluator(i) for i in self._insts]
        self._memo: dict[tuple[int, float], float] = {}

    def full_size(self, g: int) -> float:
        """Bits needed to cache every candidate SVC of the subset."""
        return float(self._evs[g].svc_w.sum())

    def __call__(self, g: int, size: float) -> float:
        key = (g, float(size))
        if key not in self._memo:
            self._memo[key] = probe_subset(self._insts[g], size, self._evs[g], self.variant)
        return self._memo[key]


def probe_subset(inst: PlacementInstance, size: float, ev: Evaluator | None = None,
                 variant: str = "robust") -> float:
    if size <= 0:
        return 0.0
    sub = replace(inst, capacity=float(size))
    # the evaluator only depends on the segments, so one per subset serves every size
    ev = ev or Evaluator(sub)
    return place(sub, ev, variant).objective


# --- the allocation loop ----------------------------------------------------------


@dataclass
class AllocationResult:
    sizes: np.ndarray  # bits per subset
    satisfaction: np.ndarray  # probed P_g at ``sizes``
    converged: bool
    iterations: int
    lagrangian_trace: list[float]
    curves: list[PwlCurve]
    curve_log: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(self.satisfaction.sum())


def allocate(
    subsets: Sequence[SubsetSpec], total_capacity: float, probe: Probe,
    params: AdmmParams = AdmmParams(), full_sizes: Sequence[float] | None = None,
) -> AllocationResult:
    """ADMM cache split over the subsets.

    Each initial curve interpolates ``init_points`` evenly spaced probes up to its anchor,
    ``full_sizes`` (bits, capped at C; default C). The returned split is the best
    budget-feasible one among the probed iterates, the projected last iterate and the
    best combination of probed breakpoints.
    """
    check_subsets(subsets)
    G = len(subsets)
    C = float(total_capacity)
    if C <= 0:
        return AllocationResult(np.zeros(G), np.zeros(G), True, 0, [], [PwlCurve() for _ in subsets])
    rng = np.random.default_rng(params.seed)
    pool = ThreadPoolExecutor(params.workers) if params.workers > 1 else None

    def probe_all(c_frac):
        args = [(g, float(c_frac[g]) * C) for g in range(G)]
        if pool is None:
            return np.array([probe(g, s) for g, s in args])
        return np.array(list(pool.map(lambda a: probe(*a), args)))

    anchors = np.ones(G) if full_sizes is None else np.minimum(np.asarray(full_sizes, float) / C, 1.0)
    anchors = np.maximum(anchors, 1e-9)
    log: list = []
    curves = [PwlCurve() for _ in range(G)]
    for k in range(1, params.init_points + 1):
        pts = anchors * k / params.init_points
        vals = probe_all(pts)
        curves = [refine_curve(cv, c, v, log) for cv, c, v in zip(curves, pts, vals)]

    state = AdmmState.initial(G, params)
    best = None
    trace: list[float] = []
    prev_L = None
    converged = False
    it = 0
    try:
        for it in range(1, params.max_iter + 1):
            state.c = update_sizes(state, curves)
            state = update_duals(state)
            state.c = np.maximum(state.c + rng.normal(0.0, state.sigma, G), 0.0)
            vals = probe_all(state.c)
            curves = [refine_curve(cv, c, v, log) for cv, c, v in zip(curves, state.c, vals)]
            if state.c.sum() <= 1.0 and (best is None or vals.sum() > best[0]):
                best = (float(vals.sum()), state.c.copy(), vals.copy())
            state.sigma *= state.attn
            state.iteration = it
            L = lagrangian(state, curves)
            trace.append(L)
            if prev_L is not None and abs(L - prev_L) < params.tol_lagrangian and state.sigma < params.tol_sigma:
                converged = True
                break
            prev_L = L
        # the last iterate, projected, and the best split over probed breakpoints
        for cand in (project_budget(state.c), project_budget(best_breakpoint_split(curves)[0])):
            vals = probe_all(cand)
            if best is None or vals.sum() > best[0]:
                best = (float(vals.sum()), cand, vals)
    finally:
        if pool is not None:
            pool.shutdown()
    _, c, vals = best
    return AllocationResult(c * C, vals, converged, it, trace, curves, log)


def best_breakpoint_split(curves: Sequence[PwlCurve], budget: float = 1.0, resolution: float = 1e-6):
    """Budget-feasible choice of one breakpoint per curve maximising the summed value.

    Pareto frontiers of (size, value) are merged subset by subset; sizes are bucketed to
    ``resolution`` only to bound the frontier. Returns ``(sizes, value)``.
    """
    front = [(0.0, 0.0, ())]
    for cv in curves:
        merged = [
            (fs + s, fv + v, picks + (s,))
            for fs, fv, picks in front
            for s, v in zip(cv.sizes, cv.values)
            if fs + s <= budget
        ]
        merged.sort(key=lambda x: (x[0], -x[1]))
        front = []
        last_bucket = None
        for item in merged:
            if front and item[1] <= front[-1][1]:
                continue
            bucket = int(item[0] / resolution)
            if front and bucket == last_bucket:
                front[-1] = item
            else:
                front.append(item)
            last_bucket = bucket
    fs, fv, picks = max(front, key=lambda x: x[1])
    return np.array(picks), fv


def grid_oracle(probe: Probe, G: int, total_capacity: float, points: int = 64) -> tuple[np.ndarray, float]:
    """Exhaustive split over ``points`` equally spaced sizes per subset, by DP.

    Grid sizes are ``k * C / (points - 1)``; a split is feasible when the ks sum to at
    most ``points - 1``. Returns the best sizes (bits) and total satisfaction.
    """
    n = points - 1
    step = total_capacity / n
    table = np.array([[probe(g, k * step) for k in range(n + 1)] for g in range(G)])
    # best[g][b]: best value using subsets g.. with b grid units left
    best = np.zeros((G + 1, n + 1))
    choice = np.zeros((G, n + 1), dtype=int)
    for g in range(G - 1, -1, -1):
        for b in range(n + 1):
            opts = table[g, : b + 1] + best[g + 1, b - np.arange(b + 1)]
            k = int(np.argmax(opts))
            best[g, b], choice[g, b] = opts[k], k
    ks, b = [], n
    for g in range(G):
        ks.append(choice[g, b])
        b -= choice[g, b]
    return np.array(ks) * step, float(best[0, n])


def save_allocation(path: str | Path, subsets: Sequence[SubsetSpec], result: AllocationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subset_id", "cache_bits", "popularity_mass", "satisfaction"])
        for s, c, v in zip(subsets, result.sizes, result.satisfaction):
            w.writerow([s.id, repr(float(c)), repr(s.popularity_mass), repr(float(v))])


def load_allocation(path: str | Path) -> list[tuple[int, float, float, float]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["subset_id", "cache_bits", "popularity_mass", "satisfaction"]:
            raise ValueError(f"unexpected allocation header {header}")
        for lineno, rec in enumerate(reader, 2):
            try:
                out.append((int(rec[0]), float(rec[1]), float(rec[2]), float(rec[3])))
            except (ValueError, IndexError):
                raise ValueError(f"line {lineno}: malformed allocation row {rec}") from None
    return out
