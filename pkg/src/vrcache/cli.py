"""Command-line entry point: ``vrcache <command> [--config PATH] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .dynamics import synth_store, write_traces
from .partition import AdmmParams, SubsetProber, allocate, make_subsets, save_allocation
from .placement import save_cache
from .scheduler.approx import load_checkpoint, save_checkpoint
from .sim.config import SimConfig, load_config
from .sim.engine import METRICS, make_agents, prepare, run, train_agents
from .sim.sweeps import SWEEPS, write_meta, write_sweep


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = cfg.with_values(run__seed=args.seed)
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg = cfg.with_values(**{k.strip().replace(".", "__"): v.strip()})
    cfg.validate()
    return cfg


def cmd_place(cfg, out: Path, args) -> None:
    world = prepare(cfg)
    save_cache(world.cache, out / "cache.txt")
    write_meta(out, cfg, {"command": "place", "objective": world.placement_value})
    print(f"objective={world.placement_value:.6f} svcs={len(world.cache.svcs)} mvcs={len(world.cache.mvcs)}")


def cmd_partition(cfg, out: Path, args) -> None:
    world = prepare(cfg.with_values(cache__method="none"))
    subsets = [s for s in make_subsets(world.catalog, args.segments_per_subset) if s.popularity_mass > 0]
    variant = "robust" if cfg.cache.method == "place" else "listed"
    prober = SubsetProber(world.catalog, cfg.delay_params(), cfg.channel_model(), subsets, variant)
    full = [prober.full_size(g) for g in range(len(subsets))]
    res = allocate(subsets, cfg.cache.capacity_fraction * sum(full), prober, AdmmParams(seed=cfg.run.seed), full)
    save_allocation(out / "allocation.csv", subsets, res)
    write_meta(out, cfg, {"command": "partition", "converged": res.converged, "iterations": res.iterations})
    print(f"total={res.total:.6f} converged={res.converged} iterations={res.iterations}")


def cmd_simulate(cfg, out: Path, args) -> None:
    world = prepare(cfg)
    agents = None
    if args.checkpoint:
        nets, _ = load_checkpoint(args.checkpoint)
        agents = make_agents(world, np.random.default_rng(0))
        for i, ag in enumerate(agents):
            ag.q_net, ag.w_net = nets[f"q{i}"], nets[f"w{i}"]
    path = out / "simulate.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["seed", *METRICS])
        w.writeheader()
        for r in range(cfg.run.replications):
            m = run(cfg, world, seed=cfg.run.seed + r, agents=agents)
            w.writerow({"seed": cfg.run.seed + r, **m.row()})
            print(f"seed={cfg.run.seed + r} hit_probability={m.hit_probability:.4f}")
    write_meta(out, cfg, {"command": "simulate", "epoch_slots": world.epoch_slots,
                          "implied_epoch_slots_fig10": 8})


def cmd_train(cfg, out: Path, args) -> None:
    world = prepare(cfg)
    agents = train_agents(world, np.random.default_rng(cfg.run.seed))
    nets = {}
    for i, ag in enumerate(agents):
        nets[f"q{i}"], nets[f"w{i}"] = ag.q_net, ag.w_net
    save_checkpoint(out / "agents.ckpt", nets, {"seed": cfg.run.seed, "epoch_slots": world.epoch_slots})
    write_meta(out, cfg, {"command": "train"})
    print(f"saved {len(agents)} agent(s) to {out / 'agents.ckpt'}")


def cmd_synth_traces(cfg, out: Path, args) -> None:
    grid = cfg.tile_grid()
    store = synth_store(grid, cfg.users.count, cfg.total_slots, cfg.users.move_prob,
                        np.random.default_rng(cfg.run.seed), cfg.seg_slots)
    write_traces(store, out / "traces.csv")
    write_meta(out, cfg, {"command": "synth-traces"})
    print(f"wrote {out / 'traces.csv'}")


def cmd_sweep(cfg, out: Path, args) -> None:
    if args.name not in SWEEPS:
        raise ValueError(f"unknown sweep {args.name!r}; choose from {', '.join(SWEEPS)}")
    rows = SWEEPS[args.name](cfg)
    path = write_sweep(args.name, rows, cfg, out)
    print(f"wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand from resetting flags given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat section.key=value file")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p = argparse.ArgumentParser(prog="vrcache", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("place", parents=[common], help="segment-wise cache placement")
    sp = sub.add_parser("partition", parents=[common], help="ADMM cache split over segment subsets")
    sp.add_argument("--segments-per-subset", type=int, default=1)
    sp = sub.add_parser("simulate", parents=[common], help="seeded replications of the slot simulator")
    sp.add_argument("--checkpoint", help="agents saved by the train command")
    sub.add_parser("train", parents=[common], help="train the index agents on the training profile")
    sp = sub.add_parser("sweep", parents=[common], help="run a named sweep")
    sp.add_argument("name", choices=sorted(SWEEPS))
    sub.add_parser("synth-traces", parents=[common], help="write synthetic viewpoint traces")
    return p


COMMANDS = {
    "place": cmd_place, "partition": cmd_partition, "simulate": cmd_simulate,
    "train": cmd_train, "sweep": cmd_sweep, "synth-traces": cmd_synth_traces,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("out", "out"), ("set", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        cfg = _config(args)
    except (OSError, ValueError) as e:
        print(f"vrcache: configuration error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    COMMANDS[args.command](cfg, out, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
