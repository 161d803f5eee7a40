"""Equilibrium temperature against total saturation parameter at one linewidth red detuning."""

import argparse

from motsim.config import RunConfig
from motsim.sweeps import DEFAULT_INTENSITIES, SweepSpec, linewidth_mhz, sweep_intensity, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--n-atoms", type=int, default=2048)
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-tof", action="store_true")
    ap.add_argument("--out", default="out/fig4")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg = cfg.update("simulation", n_atoms=args.n_atoms).update("beams", detuning_mhz=-linewidth_mhz(cfg))
    for name, model in (("intensity", False), ("intensity_model", True)):
        res = sweep_intensity(SweepSpec("intensity", DEFAULT_INTENSITIES, cfg, reps=args.reps,
                                        seed=args.seed, full_tof=args.full_tof, model_only=model,
                                        workers=args.workers))
        write_outputs(args.out, res, name=name)
        ex = res.extras
        print(f"{name}: T = {ex['slope'] * 1e6:.2f} uK * S + {ex['intercept'] * 1e6:.2f} uK, R^2 = {ex['r2']:.3f}")


if __name__ == "__main__":
    main()
