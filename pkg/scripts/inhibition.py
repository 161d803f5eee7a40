"""Bias-field suppression of sub-Doppler cooling for several g-factor mismatches."""

import argparse
from pathlib import Path

from motsim.config import RunConfig
from motsim.sweeps import DEFAULT_BIAS_G, G_SCENARIOS, compare_g_scenarios, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--n-atoms", type=int, default=2048)
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/inhibition")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg = cfg.update("simulation", n_atoms=args.n_atoms)
    rep = compare_g_scenarios(cfg, G_SCENARIOS, DEFAULT_BIAS_G, seed=args.seed, reps=args.reps,
                              workers=args.workers)
    for mm, res in rep.results.items():
        write_outputs(args.out, res, name=f"bias_mismatch_{mm:g}")
    text = "\n".join(rep.lines())
    Path(args.out, "g_scenarios.txt").write_text(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
