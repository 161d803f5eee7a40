"""Equilibrium temperature against red detuning, with and without the sub-Doppler channel."""

import argparse

from motsim.config import RunConfig
from motsim.sweeps import DEFAULT_DETUNINGS_GAMMA, SweepSpec, linewidth_mhz, sweep_detuning, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--n-atoms", type=int, default=2048)
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-tof", action="store_true")
    ap.add_argument("--out", default="out/fig3")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg = cfg.update("simulation", n_atoms=args.n_atoms)
    values = [-x * linewidth_mhz(cfg) for x in DEFAULT_DETUNINGS_GAMMA]
    for name, c in (("detuning", cfg), ("detuning_doppler_only", cfg.update("forces", subdoppler=False))):
        res = sweep_detuning(SweepSpec("detuning", values, c, reps=args.reps, seed=args.seed,
                                       full_tof=args.full_tof, workers=args.workers))
        write_outputs(args.out, res, name=name)
        print(name, "minimum", f"{res.extras['min_temperature'] * 1e6:.1f} uK at "
              f"{res.extras['min_detuning_mhz']:.2f} MHz")


if __name__ == "__main__":
    main()
