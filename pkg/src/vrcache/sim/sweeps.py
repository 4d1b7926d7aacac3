"""Parameter sweeps behind the experiment scripts and the ``sweep`` CLI command.

Each sweep returns a list of flat dict rows; :func:`write_sweep` stores them as
``<name>_<timestamp>.csv`` next to a ``run.meta`` file holding the configuration.
"""

from __future__ import annotations

import csv
import datetime as _dt
import platform
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import __version__
from ..catalog import build_catalog
from ..partition import AdmmParams, SubsetProber, allocate, make_subsets
from ..placement import Evaluator, PlacementInstance, cache_size_search, mvc_only_fill, place, svc_only
from ..quality import MovementChain, expected_misses
from .config import SimConfig, dump_config
from .engine import prepare, run

PLACERS: dict[str, Callable] = {
    "proposed": place,
    "mvc_only": mvc_only_fill,
    "svc_only": svc_only,
    "cache_size_search": cache_size_search,
}


def _segment_instance(cfg: SimConfig, segment: int, capacity_fraction: float):
    """Placement instance for one segment of the training-profile catalog."""
    world = prepare(cfg.with_values(cache__method="none", video__segments=max(segment + 1, 1)))
    base = PlacementInstance(world.catalog, cfg.delay_params(), cfg.channel_model(), 0.0, (segment,))
    ev = Evaluator(base)
    cap = capacity_fraction * float(ev.svc_w.sum())
    inst = PlacementInstance(world.catalog, cfg.delay_params(), cfg.channel_model(), cap, (segment,))
    mass = float(world.catalog.popularity[segment].sum())
    return inst, mass


def _summarise(key: dict, runs: list[dict]) -> dict:
    row = dict(key)
    for m in runs[0]:
        vals = np.array([r[m] for r in runs], dtype=float)
        row[f"{m}_mean"] = float(vals.mean())
        row[f"{m}_sd"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return row


def _placement_rows(cfg: SimConfig, key: str, values: Sequence[float], segments: Sequence[int],
                    capacity_fraction: float) -> list[dict]:
    """Mean and sd over ``segments`` of each scheme's per-request satisfaction probability."""
    rows = []
    for v in values:
        c = cfg.with_values(**{key.replace(".", "__"): v})
        per_seg = []
        for seg in segments:
            inst, mass = _segment_instance(c, seg, capacity_fraction)
            ev = Evaluator(inst)
            # normalise to the segment's mass: a satisfaction probability per request
            per_seg.append({name: fn(inst, ev=ev).objective / mass for name, fn in PLACERS.items()})
        rows.append(_summarise({key: v, "segments": len(per_seg)}, per_seg))
    return rows


def sweep_chi(cfg: SimConfig, values=(2e-8, 5e-8, 1e-7, 1.5e-7, 2e-7), segments=(0, 1, 2),
              capacity_fraction: float = 0.2, **_) -> list[dict]:
    """Per-segment delay satisfaction of each placement scheme against the stitching cost."""
    return _placement_rows(cfg, "delay.chi", values, segments, capacity_fraction)


def sweep_channel(cfg: SimConfig, values=(0.2, 0.4, 0.6, 0.8), segments=(0, 1, 2),
                  capacity_fraction: float = 0.2, **_) -> list[dict]:
    """Same comparison against p_H, the High -> Low transition probability."""
    return _placement_rows(cfg, "channel.p_high", values, segments, capacity_fraction)


def sweep_popularity(cfg: SimConfig, subsets: int = 20, capacity_fraction: float = 0.1,
                     admm: AdmmParams | None = None, **_) -> list[dict]:
    """ADMM cache split over segment subsets with random subset popularity."""
    rng = np.random.default_rng(cfg.run.seed)
    c = cfg.with_values(video__segments=subsets)
    world = prepare(c.with_values(cache__method="none"))
    cat = world.catalog
    # rescale each segment to a random mass so subsets differ in popularity
    weights = rng.dirichlet(np.ones(subsets))
    seg_mass = cat.popularity.sum(axis=(1, 2))
    pop = cat.popularity * (weights / np.where(seg_mass > 0, seg_mass, 1.0))[:, None, None]
    pop = pop / pop.sum()
    cat = build_catalog(cat.grid, cat.segments, pop, np.random.default_rng(cfg.run.seed),
                        cat.quality, cat.alpha, c.video.size_mean, c.video.size_sd, c.video.size_floor)
    specs = [s for s in make_subsets(cat, 1) if s.popularity_mass > 0]
    variant = "robust" if c.cache.method == "place" else "listed"
    prober = SubsetProber(cat, c.delay_params(), c.channel_model(), specs, variant)
    full = [prober.full_size(g) for g in range(len(specs))]
    capacity = capacity_fraction * sum(full)
    res = allocate(specs, capacity, prober, admm or AdmmParams(seed=cfg.run.seed), full)
    return [
        {"subset_id": s.id, "popularity_mass": s.popularity_mass, "cache_bits": float(b),
         "cache_share": float(b / capacity), "satisfaction": float(v)}
        for s, b, v in zip(specs, res.sizes, res.satisfaction)
    ]


def compare_schedulers(cfg: SimConfig, policies=("wi", "URF", "RoundRobin", "Random"),
                       seeds: Sequence[int] | None = None, per_seed: bool = False, **_) -> list[dict]:
    """Run metrics per policy: mean and sd over seeds, or one row per seed."""
    seeds = range(cfg.run.seed, cfg.run.seed + cfg.run.replications) if seeds is None else seeds
    world = prepare(cfg)
    rows = []
    for pol in policies:
        c = cfg.with_values(sched__policy=pol)
        world.cfg = c
        runs = [run(c, world, seed=s).row() for s in seeds]
        if per_seed:
            rows += [{"policy": pol, "seed": s, **r} for s, r in zip(seeds, runs)]
        else:
            rows.append(_summarise({"policy": pol, "seeds": len(runs), "epoch_slots": world.epoch_slots}, runs))
    world.cfg = cfg
    return rows


def sweep_x0(cfg: SimConfig, x0_values=(9, 11, 13, 15, 18), x_total: int = 18,
             reacquire_prob: float = 0.1, policy: str = "URF",
             seeds: Sequence[int] | None = None, **_) -> list[dict]:
    """Layer-0 count at a fixed total X: analytic expected misses and simulated hit probability.

    The analytic horizon is one epoch of the configured delivery interval.
    """
    seeds = range(cfg.run.seed, cfg.run.seed + cfg.run.replications) if seeds is None else seeds
    rows = []
    for x0 in x0_values:
        c = cfg.with_values(video__x0=x0, video__x_total=x_total, sched__policy=policy)
        world = prepare(c)
        chain = MovementChain.for_x0(c.users.move_prob, reacquire_prob, x0)
        stats = expected_misses(chain, None, max(world.epoch_slots, 1))
        hits = [run(c, world, seed=s).hit_probability for s in seeds]
        rows.append({
            "x0": x0, "x_total": x_total, "F": chain.max_tier, "expected_misses": stats.mean_misses,
            "hit_probability_mean": float(np.mean(hits)),
            "hit_probability_sd": float(np.std(hits, ddof=1)) if len(hits) > 1 else 0.0,
            "epoch_slots": world.epoch_slots,
        })
    return rows


SWEEPS: dict[str, Callable[..., list[dict]]] = {
    "sweep_chi": sweep_chi,
    "sweep_channel": sweep_channel,
    "sweep_popularity": sweep_popularity,
    "compare_schedulers": compare_schedulers,
    "sweep_x0": sweep_x0,
}


def write_sweep(name: str, rows: list[dict], cfg: SimConfig, out: str | Path,
                extra_meta: dict | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
    path = out / f"{name}_{stamp}.csv"
    fields = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    write_meta(out, cfg, {"sweep": name, "csv": path.name, **(extra_meta or {})})
    return path


def write_meta(out: str | Path, cfg: SimConfig, extra: dict | None = None) -> Path:
    meta = Path(out) / "run.meta"
    lines = [
        f"# vrcache {__version__}, python {platform.python_version()}, numpy {np.__version__}",
        f"# written {_dt.datetime.now().isoformat(timespec='seconds')}",
    ]
    lines += [f"# {k}={v}" for k, v in (extra or {}).items()]
    meta.write_text("\n".join(lines) + "\n" + dump_config(cfg))
    return meta
