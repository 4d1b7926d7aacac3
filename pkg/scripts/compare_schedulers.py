"""Hit probability of WI, URF, RoundRobin and Random at the default and low-R_H channels."""

import argparse

from vrcache.sim.config import SimConfig
from vrcache.sim.sweeps import compare_schedulers, write_sweep

LOW_RH = dict(channel__rate_high=40e6, channel__rate_low=8e6)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/schedulers")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--per-seed", action="store_true", help="one row per seed instead of mean and sd")
    args = ap.parse_args()
    for label, cfg in (("default", SimConfig()), ("low_rh", SimConfig().with_values(**LOW_RH))):
        rows = compare_schedulers(cfg, seeds=range(args.seeds), per_seed=args.per_seed)
        for r in rows:
            hp = r.get("hit_probability_mean", r.get("hit_probability"))
            print(f"{label:8s} {r['policy']:10s} hit probability {hp:.4f}")
        print(f"wrote {write_sweep(f'compare_schedulers_{label}', rows, cfg, args.out)}")


if __name__ == "__main__":
    main()
