"""Per-segment delay satisfaction of the placement schemes against chi and p_H."""

import argparse

from vrcache.sim.config import SimConfig
from vrcache.sim.sweeps import sweep_channel, sweep_chi, write_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/placement")
    ap.add_argument("--segments", type=int, default=3, help="segments averaged per point")
    ap.add_argument("--capacity", type=float, default=0.2, help="cache size as a fraction of all SVC bits")
    args = ap.parse_args()
    cfg = SimConfig()
    segs = tuple(range(args.segments))
    for name, fn in (("sweep_chi", sweep_chi), ("sweep_channel", sweep_channel)):
        rows = fn(cfg, segments=segs, capacity_fraction=args.capacity)
        print(f"wrote {write_sweep(name, rows, cfg, args.out)}")


if __name__ == "__main__":
    main()
