"""Random desk-scale placement instances used by tests, benchmarks and scripts."""

from __future__ import annotations

import numpy as np

from .catalog import Catalog, QualityConfig, TileGrid, draw_mvc_sizes
from .delay import ChannelModel, DelayParams
from .placement import PlacementInstance


def random_popularity(rng: np.random.Generator, shape, sparsity: float = 0.3) -> np.ndarray:
    pop = rng.dirichlet(np.full(int(np.prod(shape)), 0.7)).reshape(shape)
    pop[rng.random(shape) < sparsity] = 0.0
    if pop.sum() == 0:
        pop.flat[rng.integers(pop.size)] = 1.0
    return pop / pop.sum()


def random_instance(
    rng: np.random.Generator,
    max_centers: int = 12,
    max_segments: int = 3,
    x0: int | None = None,
    x1: int | None = None,
) -> PlacementInstance:
    """Tiny 1-row catalog with delays scaled around a unit deadline.

    Delay constants are drawn so each of edge transmission, stitching and backhaul can
    decide whether the deadline is met, which is where MVC/SVC trade-offs appear.
    """
    segments = int(rng.integers(1, max_segments + 1))
    cols = int(rng.integers(3, max(3, max_centers // segments) + 1))
    grid = TileGrid(rows=1, cols=cols, fov_rows=1, fov_cols=1)
    x0 = int(rng.integers(1, min(3, cols) + 1)) if x0 is None else x0
    x1 = int(rng.integers(0, x0 + 1)) if x1 is None else x1
    quality = QualityConfig(x_total=x0 + x1, x0=x0)
    sizes = draw_mvc_sizes(grid, segments, rng)
    pop = random_popularity(rng, (segments, 1, cols))
    catalog = Catalog(grid, segments, quality, sizes, 1.3, pop)

    bits = 30e3 * (x0 + x1)
    svc_bits = 1.3 * bits
    deadline = 1.0
    rate_high = svc_bits / (deadline * rng.uniform(0.15, 0.7))
    rate_low = min(rate_high, svc_bits / (deadline * rng.uniform(0.4, 1.3)))
    params = DelayParams(
        backhaul_rate=bits / (deadline * rng.uniform(0.1, 1.2)),
        chi=deadline * rng.uniform(0.0, 0.8) / bits,
        deadline=deadline,
        slot_len=0.3,
    )
    channel = ChannelModel(rate_low, rate_high, p_to_high=0.3, p_to_low=0.6)
    capacity = rng.uniform(0.05, 0.6) * svc_bits * cols * segments
    return PlacementInstance(catalog, params, channel, capacity)


def random_subset_problem(rng: np.random.Generator, G: int, cols: int = 5):
    """Small cache-split problem: one segment per subset on a 1-row ring.

    Returns ``(subsets, prober, capacity)`` with capacity between 15% and 50% of the
    bits needed to cache every SVC.
    """
    from .catalog import build_catalog
    from .partition import SubsetProber, make_subsets

    grid = TileGrid(rows=1, cols=cols, fov_rows=1, fov_cols=1)
    pop = random_popularity(rng, (G, 1, cols))
    cat = build_catalog(grid, G, pop, rng, QualityConfig(3, 2))
    bits = 30e3 * 3
    svc_bits = 1.3 * bits
    params = DelayParams(backhaul_rate=bits / 0.5, chi=0.3 / bits, deadline=1.0, slot_len=0.3)
    channel = ChannelModel(svc_bits / 1.0, svc_bits / 0.4)
    subsets = make_subsets(cat)
    prober = SubsetProber(cat, params, channel, subsets)
    capacity = rng.uniform(0.15, 0.5) * svc_bits * cols * G
    return subsets, prober, capacity
