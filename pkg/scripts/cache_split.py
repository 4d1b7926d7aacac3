"""ADMM cache split over 20 segment subsets with random popularity mass."""

import argparse

from scipy.stats import spearmanr

from vrcache.sim.config import SimConfig
from vrcache.sim.sweeps import sweep_popularity, write_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/cache_split")
    ap.add_argument("--subsets", type=int, default=20)
    ap.add_argument("--capacity", type=float, default=0.1, help="cache size as a fraction of all SVC bits")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = SimConfig().with_values(run__seed=args.seed)
    rows = sweep_popularity(cfg, subsets=args.subsets, capacity_fraction=args.capacity)
    rho = spearmanr([r["popularity_mass"] for r in rows], [r["cache_bits"] for r in rows]).statistic
    print(f"Spearman(popularity mass, cache bits) = {rho:.3f}")
    print(f"wrote {write_sweep('sweep_popularity', rows, cfg, args.out, {'spearman': rho})}")


if __name__ == "__main__":
    main()
