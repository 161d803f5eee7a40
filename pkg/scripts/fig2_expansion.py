"""Cool a cloud at large red detuning, release it and image the ballistic expansion.

Writes one PGM (+ JSON sidecar) per frame, the radius series and the temperature fit.
"""

import argparse
from pathlib import Path

import numpy as np

from motsim.config import RunConfig
from motsim.dynamics import ballistic_expand, evolve_to_equilibrium, init_ensemble
from motsim.rng import derive_seed
from motsim.thermometry import (measure_tof, probe_scatter_rate, render_image, write_fit, write_pgm,
                                write_series_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--detuning-gamma", type=float, default=3.0)
    ap.add_argument("--n-atoms", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/fig2")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    tr = cfg.build_transition()
    gamma_mhz = tr.linewidth / (2 * np.pi * 1e6)
    cfg = (cfg.update("beams", detuning_mhz=-args.detuning_gamma * gamma_mhz)
           .update("simulation", n_atoms=args.n_atoms, seed=args.seed))
    sim = cfg.simulation
    state = init_ensemble(sim.n_atoms, sim.t_init_uk * 1e-6, sim.r_init_um * 1e-6, tr.species, sim.seed)
    eq = evolve_to_equilibrium(state, cfg.build_context(), sim.max_time_ms * 1e-3, dt=sim.dt_us * 1e-6)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cam, rate = cfg.build_camera(), probe_scatter_rate(tr, cfg.probe_intensity)
    times = np.asarray(cfg.camera.tof_grid_ms) * 1e-3
    exposure = cfg.camera.exposure_us * 1e-6
    m = measure_tof(eq.state, tr.species, times, cam, rate, exposure=exposure,
                    shot_noise=cfg.camera.shot_noise, seed=sim.seed, gravity=sim.gravity)
    for i, t in enumerate(times):
        frame = ballistic_expand(eq.state, float(t), gravity=sim.gravity)
        img = render_image(frame, cam, exposure, rate, cfg.camera.shot_noise, seed=derive_seed(sim.seed, i))
        write_pgm(out / f"frame_{i:02d}.pgm", img, extra={"dt_s": float(t)})
    write_series_csv(out / "radii.csv", m.series)
    write_fit(out / "fit.csv", m.fit, m.axis_fits)
    cfg.save(out / "config.ini")
    print(f"kinetic T = {eq.stats.temperature * 1e6:.2f} uK, "
          f"time-of-flight T = {m.fit.temperature * 1e6:.2f} +/- {m.fit.temperature_err * 1e6:.2f} uK, "
          f"r(0) = {m.fit.r0 * 1e6:.1f} um")


if __name__ == "__main__":
    main()
