"""Tiled VR video universe: MVC/SVC identifiers, composition rules, render sets, sizes
and viewpoint popularity.

Grid coordinates are ``(row, col)``; rows are the vertical (non-wrapping) axis and
columns the horizontal axis, which wraps around (equirectangular projection).
Segments are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

Tile = tuple[int, int]


class MvcId(NamedTuple):
    row: int
    col: int
    segment: int
    layer: int

    @property
    def tile(self) -> Tile:
        return (self.row, self.col)


class SvcId(NamedTuple):
    row: int
    col: int
    segment: int

    @property
    def tile(self) -> Tile:
        return (self.row, self.col)


class Viewpoint(NamedTuple):
    row: int
    col: int
    segment: int

    @property
    def tile(self) -> Tile:
        return (self.row, self.col)


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int
    fov_rows: int
    fov_cols: int

    def __post_init__(self):
        if not (self.rows >= self.fov_rows >= 1 and self.cols >= self.fov_cols >= 1):
            raise ValueError(f"invalid grid {self}")
        # the FoV block must have a well-defined centre tile
        if self.fov_rows % 2 == 0 or self.fov_cols % 2 == 0:
            raise ValueError("FoV dimensions must be odd")

    @property
    def n_tiles(self) -> int:
        return self.rows * self.cols

    @property
    def fov_size(self) -> int:
        return self.fov_rows * self.fov_cols

    def contains(self, row: int, col: int) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def effective_row(self, row: int) -> int:
        """Row of the FoV centre after shifting the block to fit vertically."""
        half = self.fov_rows // 2
        return min(max(row, half), self.rows - 1 - half)

    def col_distance(self, c0: int, c1: int) -> int:
        d = abs(c0 - c1) % self.cols
        return min(d, self.cols - d)

    def tile_distance(self, a: Tile, b: Tile) -> int:
        """Wrap-aware Chebyshev distance scaled by the FoV aspect ratio.

        Integer form of ``max(|dr| / fov_rows, |dc| / fov_cols)``; its sub-level sets are
        FoV-shaped rectangles, so the ``fov_size`` nearest tiles form the FoV block.
        """
        dr = abs(a[0] - b[0])
        dc = self.col_distance(a[1], b[1])
        return max(dr * self.fov_cols, dc * self.fov_rows)

    def fov_tiles(self, row: int, col: int) -> frozenset[Tile]:
        r0 = self.effective_row(row)
        hr, hc = self.fov_rows // 2, self.fov_cols // 2
        return frozenset(
            (r, (col + dc) % self.cols)
            for r in range(r0 - hr, r0 + hr + 1)
            for dc in range(-hc, hc + 1)
        )

    def canonical_center(self, row: int, col: int) -> Tile:
        return (self.effective_row(row), col % self.cols)

    def centers(self) -> list[Tile]:
        """Distinct SVC centres (rows whose FoV block fits without shifting)."""
        half = self.fov_rows // 2
        return [(r, c) for r in range(half, self.rows - half) for c in range(self.cols)]


@dataclass(frozen=True)
class QualityConfig:
    x_total: int
    x0: int

    @property
    def x1(self) -> int:
        return self.x_total - self.x0

    def validate(self, grid: TileGrid) -> None:
        if not grid.fov_size <= self.x0 <= self.x_total:
            raise ValueError(f"need fov_size <= x0 <= x_total, got {self} for FoV {grid.fov_size}")
        if self.x0 > grid.n_tiles:
            raise ValueError(f"x0={self.x0} exceeds the {grid.n_tiles} tiles of the grid")
        if self.x1 > self.x0:
            raise ValueError(f"layer-1 count {self.x1} exceeds layer-0 count {self.x0}")

    @classmethod
    def default_for(cls, grid: TileGrid, x0: int | None = None) -> "QualityConfig":
        x0 = grid.fov_size if x0 is None else x0
        return cls(x_total=x0 + min(5, x0), x0=x0)


@dataclass(frozen=True, eq=False)
class Catalog:
    grid: TileGrid
    segments: int
    quality: QualityConfig
    mvc_size: np.ndarray  # (segments, rows, cols, 2) bits
    alpha: float
    popularity: np.ndarray  # (segments, rows, cols)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.quality.validate(self.grid)
        g = self.grid
        if self.mvc_size.shape != (self.segments, g.rows, g.cols, 2):
            raise ValueError(f"mvc_size shape {self.mvc_size.shape} does not match catalog")
        if self.popularity.shape != (self.segments, g.rows, g.cols):
            raise ValueError(f"popularity shape {self.popularity.shape} does not match catalog")
        if np.any(self.mvc_size <= 0):
            raise ValueError("MVC sizes must be positive")
        if np.any(self.popularity < 0) or abs(self.popularity.sum() - 1.0) > 1e-9:
            raise ValueError("popularity must be non-negative and sum to 1")
        self.mvc_size.setflags(write=False)
        self.popularity.setflags(write=False)

    # --- composition -------------------------------------------------------------

    def _layer_tiles(self, center: Tile) -> tuple[Tile, ...]:
        key = ("tiles", center)
        if key not in self._memo:
            g = self.grid
            c = g.canonical_center(*center)
            order = sorted(
                ((g.tile_distance(c, (r, cc)), r, cc) for r in range(g.rows) for cc in range(g.cols))
            )
            self._memo[key] = tuple((r, cc) for _, r, cc in order[: self.quality.x0])
        return self._memo[key]

    def render_tiles(self, center: Tile) -> frozenset[Tile]:
        """Viewpoint tiles whose whole FoV lies inside the layer-0 coverage of ``center``."""
        key = ("render", center)
        if key not in self._memo:
            covered = frozenset(self._layer_tiles(center))
            self._memo[key] = frozenset(
                t for t in covered if self.grid.fov_tiles(*t) <= covered
            )
        return self._memo[key]

    def renderers(self, tile: Tile) -> tuple[Tile, ...]:
        """Canonical SVC centres whose render set contains ``tile``, sorted."""
        key = ("renderers",)
        if key not in self._memo:
            inv: dict[Tile, list[Tile]] = {}
            for c in self.grid.centers():
                for t in self.render_tiles(c):
                    inv.setdefault(t, []).append(c)
            self._memo[key] = {t: tuple(sorted(v)) for t, v in inv.items()}
        return self._memo[key].get(tile, ())

    def svc_ids(self, segment: int | None = None) -> list[SvcId]:
        segs = range(self.segments) if segment is None else [segment]
        return [SvcId(r, c, j) for j in segs for r, c in self.grid.centers()]

    def svc_for_viewpoint(self, d: Viewpoint) -> SvcId:
        r, c = self.grid.canonical_center(d.row, d.col)
        return SvcId(r, c, d.segment)

    def check_svc(self, f: SvcId) -> None:
        if not (self.grid.contains(f.row, f.col) and 0 <= f.segment < self.segments):
            raise ValueError(f"{f} outside catalog")

    def members(self, f: SvcId) -> tuple[MvcId, ...]:
        layer0, layer1 = mvc_sets_for_svc(self, f)
        return layer0 + layer1

    @cached_property
    def n_viewpoints(self) -> int:
        return self.segments * self.grid.n_tiles

    def viewpoints(self) -> Iterable[Viewpoint]:
        for j in range(self.segments):
            for r in range(self.grid.rows):
                for c in range(self.grid.cols):
                    yield Viewpoint(r, c, j)

    def p(self, d: Viewpoint) -> float:
        return float(self.popularity[d.segment, d.row, d.col])

    def size(self, t: MvcId) -> float:
        return float(self.mvc_size[t.segment, t.row, t.col, t.layer])

    def with_quality(self, quality: QualityConfig) -> "Catalog":
        return Catalog(self.grid, self.segments, quality, self.mvc_size, self.alpha, self.popularity)

    def slice_segments(self, segments: Iterable[int]) -> "Catalog":
        """Sub-catalog over ``segments`` with popularity left unnormalised-then-rescaled.

        The returned catalog's popularity sums to 1; ``mass`` of the original slice is
        available via :func:`segment_mass`.
        """
        segs = sorted(set(segments))
        pop = np.array(self.popularity[segs], dtype=float)
        total = pop.sum()
        pop = pop / total if total > 0 else np.full_like(pop, 1.0 / pop.size)
        return Catalog(self.grid, len(segs), self.quality, np.array(self.mvc_size[segs]), self.alpha, pop)


def segment_mass(catalog: Catalog, segments: Iterable[int]) -> float:
    return float(catalog.popularity[sorted(set(segments))].sum())


def mvc_sets_for_svc(catalog: Catalog, f: SvcId) -> tuple[tuple[MvcId, ...], tuple[MvcId, ...]]:
    """Layer-0 set B(f, X0) and layer-1 set E(f, X0) composing SVC ``f``.

    Layer-0 holds the X0 tiles nearest the centre; layer-1 overlays the innermost
    X - X0 of them. Both tuples are in selection order.
    """
    catalog.check_svc(f)
    tiles = catalog._layer_tiles(f.tile)
    j = f.segment
    layer0 = tuple(MvcId(r, c, j, 0) for r, c in tiles)
    layer1 = tuple(MvcId(r, c, j, 1) for r, c in tiles[: catalog.quality.x1])
    return layer0, layer1


def render_set(catalog: Catalog, f: SvcId) -> frozenset[Viewpoint]:
    catalog.check_svc(f)
    return frozenset(Viewpoint(r, c, f.segment) for r, c in catalog.render_tiles(f.tile))


def svc_size(catalog: Catalog, f: SvcId) -> float:
    key = ("svc_size", f)
    if key not in catalog._memo:
        catalog._memo[key] = catalog.alpha * sum(catalog.size(t) for t in catalog.members(f))
    return catalog._memo[key]


def popularity_from_traces(traces, grid: TileGrid, segments: int) -> np.ndarray:
    """Empirical viewpoint frequency over all trace slots.

    ``traces`` is an iterable of per-user viewpoint sequences (or a ``TrajectoryStore``).
    """
    counts = np.zeros((segments, grid.rows, grid.cols))
    seqs = traces.users.values() if hasattr(traces, "users") else traces
    for user, seq in enumerate(seqs):
        a = np.asarray([tuple(v) for v in seq] if not isinstance(seq, np.ndarray) else seq, dtype=np.int64)
        if a.size == 0:
            continue
        a = a.reshape(-1, 3)
        bad = (a[:, 0] < 0) | (a[:, 0] >= grid.rows) | (a[:, 1] < 0) | (a[:, 1] >= grid.cols) \
            | (a[:, 2] < 0) | (a[:, 2] >= segments)
        if bad.any():
            slot = int(np.argmax(bad))
            raise ValueError(f"trace of user {user} at slot {slot}: {tuple(a[slot])} outside the grid")
        np.add.at(counts, (a[:, 2], a[:, 0], a[:, 1]), 1)
    total = counts.sum()
    if total == 0:
        raise ValueError("traces are empty")
    return counts / total


def draw_mvc_sizes(
    grid: TileGrid, segments: int, rng: np.random.Generator,
    mean: float = 30e3, sd: float = 10e3, floor: float = 1e3,
) -> np.ndarray:
    sizes = rng.normal(mean, sd, size=(segments, grid.rows, grid.cols, 2))
    return np.maximum(sizes, floor)


def build_catalog(
    grid: TileGrid,
    segments: int,
    popularity: np.ndarray,
    rng: np.random.Generator,
    quality: QualityConfig | None = None,
    alpha: float = 1.3,
    size_mean: float = 30e3,
    size_sd: float = 10e3,
    size_floor: float = 1e3,
) -> Catalog:
    quality = quality or QualityConfig.default_for(grid)
    sizes = draw_mvc_sizes(grid, segments, rng, size_mean, size_sd, size_floor)
    return Catalog(grid, segments, quality, sizes, alpha, np.asarray(popularity, dtype=float))
