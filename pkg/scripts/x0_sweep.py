"""Layer-0 count: analytic expected misses per (p, q) and simulated hit probability."""

import argparse

from vrcache.quality import x0_sweep
from vrcache.sim.config import SimConfig
from vrcache.sim.sweeps import sweep_x0, write_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/x0")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--horizon", type=int, default=8, help="slots per analytic episode")
    ap.add_argument("--episodes", type=int, default=0, help="Monte-Carlo episodes per point (0: analytic only)")
    args = ap.parse_args()
    cfg = SimConfig()
    rows = []
    for p, q in ((0.02, 0.1), (0.05, 0.3), (0.1, 0.6)):
        for r in x0_sweep(p, q, range(9, 122, 8), args.horizon, args.episodes):
            rows.append({"p": p, "q": q, **r})
    print(f"wrote {write_sweep('x0_analytic', rows, cfg, args.out)}")
    sim = sweep_x0(cfg, seeds=range(args.seeds))
    for r in sim:
        print(f"x0={r['x0']:3d} hit probability {r['hit_probability_mean']:.4f} +- {r['hit_probability_sd']:.4f}")
    print(f"wrote {write_sweep('x0_simulated', sim, cfg, args.out)}")


if __name__ == "__main__":
    main()
