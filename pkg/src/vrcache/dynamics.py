"""Stochastic environment: two-state channel chain, viewpoint trajectories and the
viewpoint predictor that yields each headset's desired viewpoint."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .catalog import TileGrid, Viewpoint
from .delay import ChannelModel

HIGH, LOW = True, False

TRACE_HEADER = ["user_id", "slot", "segment", "tile_row", "tile_col"]

_MOVES = np.array([(-1, 0), (1, 0), (0, -1), (0, 1)])


def step_channel(high: bool, model: ChannelModel, rng: np.random.Generator) -> tuple[bool, float]:
    """One slot of the chain: High leaves w.p. p_H, Low leaves w.p. p_L."""
    u = rng.random()
    if high:
        high = not (u < model.p_to_low)
    else:
        high = u < model.p_to_high
    return high, model.rate_high if high else model.rate_low


def channel_path(model: ChannelModel, steps: int, rng: np.random.Generator, start_high: bool = True) -> np.ndarray:
    """Boolean High/Low states for ``steps`` consecutive slots after the start state."""
    u = rng.random(steps)
    out = np.empty(steps, dtype=bool)
    high = start_high
    for k in range(steps):
        high = not (u[k] < model.p_to_low) if high else bool(u[k] < model.p_to_high)
        out[k] = high
    return out


def synth_trajectory(
    grid: TileGrid, move_prob: float, length: int, rng: np.random.Generator,
    seg_slots: int = 121, start: tuple[int, int] | None = None, first_segment: int = 0,
) -> np.ndarray:
    """Random walk on the tile grid, one row ``(row, col, segment)`` per slot.

    Each slot the viewpoint moves one tile with probability ``4 * move_prob`` in a uniform
    cardinal direction; columns wrap and rows clamp at the poles.
    """
    if not 0 <= 4 * move_prob <= 1:
        raise ValueError(f"need 0 <= 4p <= 1, got p={move_prob}")
    if start is None:
        start = (int(rng.integers(grid.rows)), int(rng.integers(grid.cols)))
    moves = rng.random(length) < 4 * move_prob
    dirs = _MOVES[rng.integers(4, size=length)]
    out = np.empty((length, 3), dtype=np.int64)
    r, c = start
    for k in range(length):
        if k > 0 and moves[k]:
            r = min(max(r + dirs[k, 0], 0), grid.rows - 1)
            c = (c + dirs[k, 1]) % grid.cols
        out[k] = (r, c, first_segment + k // seg_slots)
    return out


@dataclass
class TrajectoryStore:
    """Per-user viewpoint arrays of shape ``(slots, 3)`` holding ``(row, col, segment)``."""

    users: dict[int, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.users)

    def viewpoints(self, user: int) -> list[Viewpoint]:
        return [Viewpoint(int(r), int(c), int(j)) for r, c, j in self.users[user]]

    def segments(self) -> int:
        return max((int(a[:, 2].max()) + 1 for a in self.users.values() if len(a)), default=0)

    def validate(self, grid: TileGrid) -> None:
        for u, a in self.users.items():
            if len(a) and (
                a[:, 0].min() < 0 or a[:, 0].max() >= grid.rows
                or a[:, 1].min() < 0 or a[:, 1].max() >= grid.cols
                or a[:, 2].min() < 0
            ):
                raise ValueError(f"user {u}: viewpoint outside the {grid.rows}x{grid.cols} grid")


def synth_store(
    grid: TileGrid, users: int, length: int, move_prob: float, rng: np.random.Generator,
    seg_slots: int = 121,
) -> TrajectoryStore:
    children = rng.spawn(users)
    return TrajectoryStore({
        u: synth_trajectory(grid, move_prob, length, children[u], seg_slots) for u in range(users)
    })


def write_traces(store: TrajectoryStore, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for u in sorted(store.users):
            for k, (r, c, j) in enumerate(store.users[u]):
                w.writerow([u, k, j, r, c])


def ingest_traces(path: str | Path, grid: TileGrid) -> TrajectoryStore:
    rows: dict[int, dict[int, tuple[int, int, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, 1):
            if not rec or all(not x.strip() for x in rec):
                continue
            if lineno == 1 and [x.strip() for x in rec] == TRACE_HEADER:
                continue
            if len(rec) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(rec)}")
            try:
                u, k, j, r, c = (int(x) for x in rec)
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer field in {rec}") from None
            if not grid.contains(r, c) or j < 0 or k < 0:
                raise ValueError(f"line {lineno}: tile ({r}, {c}) segment {j} outside the grid")
            if k in rows.setdefault(u, {}):
                raise ValueError(f"line {lineno}: duplicate slot {k} for user {u}")
            rows[u][k] = (r, c, j)
    store = TrajectoryStore()
    for u, by_slot in rows.items():
        n = len(by_slot)
        if sorted(by_slot) != list(range(n)):
            raise ValueError(f"user {u}: slots are not contiguous from 0")
        store.users[u] = np.array([(r, c, j) for r, c, j in (by_slot[k] for k in range(n))], dtype=np.int64)
    return store


# --- prediction ------------------------------------------------------------------


@dataclass(frozen=True)
class PredictorConfig:
    kind: str = "velocity"  # persistence | velocity | learned
    history_len: int = 8
    horizon: int = 121

    def __post_init__(self):
        if self.history_len < 1:
            raise ValueError("history_len must be >= 1")
        if self.kind not in ("persistence", "velocity", "learned"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")


# A learned predictor maps (history (P, 2) tiles, steps) -> (steps, 2) predicted tiles.
LearnedPredictor = Callable[[np.ndarray, int], np.ndarray]


def predict_tiles(
    history: np.ndarray, steps: int, config: PredictorConfig, grid: TileGrid,
    learned: LearnedPredictor | None = None,
) -> np.ndarray:
    """Predicted ``(row, col)`` for each of the next ``steps`` slots."""
    hist = np.asarray(history)[-config.history_len:, :2]
    last = hist[-1]
    h = np.arange(1, steps + 1)
    if config.kind == "learned":
        if learned is None:
            raise ValueError("learned predictor requested but no model supplied")
        return np.asarray(learned(hist, steps))
    if config.kind == "persistence" or len(hist) < 2:
        return np.tile(last, (steps, 1))
    dr = np.diff(hist[:, 0])
    dc = np.diff(hist[:, 1])
    dc = (dc + grid.cols // 2) % grid.cols - grid.cols // 2  # shortest wrap displacement
    vr, vc = dr.mean(), dc.mean()
    rows = np.clip(last[0] + np.rint(h * vr).astype(int), 0, grid.rows - 1)
    cols = (last[1] + np.rint(h * vc).astype(int)) % grid.cols
    return np.stack([rows, cols], axis=1)


@dataclass(frozen=True)
class Playback:
    """Deterministic playback clock: a new segment every ``seg_slots`` slots."""

    seg_slots: int
    n_segments: int

    def future_segments(self, segment: int, phase: int, steps: int) -> np.ndarray:
        return segment + (phase + np.arange(1, steps + 1)) // self.seg_slots


def predict_desired(
    history: np.ndarray, slot: int, segment: int, phase: int,
    coverage: dict[int, np.ndarray], config: PredictorConfig, grid: TileGrid, clock: Playback,
    learned: LearnedPredictor | None = None,
) -> tuple[Viewpoint, int] | None:
    """First predicted future viewpoint not rendered by the buffer, with its playback slot.

    ``coverage`` maps a segment to a boolean ``(rows, cols)`` array of tiles renderable from
    the buffer. Returns None when every prediction within the horizon is covered.
    """
    if len(history) < 1:
        raise ValueError("history must hold at least one viewpoint")
    steps = config.horizon
    segs = clock.future_segments(segment, phase, steps)
    valid = segs < clock.n_segments
    if not valid.any():
        return None
    steps = int(valid.sum())
    segs = segs[:steps]
    tiles = predict_tiles(history, steps, config, grid, learned)
    covered = np.zeros(steps, dtype=bool)
    for j in np.unique(segs):
        cov = coverage.get(int(j))
        if cov is not None:
            sel = segs == j
            covered[sel] = cov[tiles[sel, 0], tiles[sel, 1]]
    miss = np.flatnonzero(~covered)
    if len(miss) == 0:
        return None
    i = int(miss[0])
    return Viewpoint(int(tiles[i, 0]), int(tiles[i, 1]), int(segs[i])), slot + i + 1


def prediction_accuracy(
    config: PredictorConfig, store: TrajectoryStore, horizon: int, grid: TileGrid,
    learned: LearnedPredictor | None = None, oracle: bool = False,
) -> float:
    """Fraction of slots whose tile ``horizon`` slots ahead is predicted exactly."""
    hits = total = 0
    for a in store.users.values():
        for k in range(len(a) - horizon):
            if oracle:
                pred = a[k + horizon, :2]
            else:
                lo = max(0, k + 1 - config.history_len)
                pred = predict_tiles(a[lo:k + 1], horizon, config, grid, learned)[-1]
            hits += int(pred[0] == a[k + horizon, 0] and pred[1] == a[k + horizon, 1])
            total += 1
    return hits / total if total else 1.0
