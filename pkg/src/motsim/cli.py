"""Command-line entry point: simulate, sweep, tof-fit, limits."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .atomkit import (InvalidInputError, doppler_limit, get_preset, load_presets,
                      locking_velocities, phase_space_density, recoil_limit)
from .config import RunConfig
from .constants import GAUSS
from .dynamics import evolve_to_equilibrium, init_ensemble, write_history, write_snapshot
from .sweeps import (DEFAULT_BIAS_G, DEFAULT_DETUNINGS_GAMMA, DEFAULT_INTENSITIES, SweepSpec,
                     compare_g_scenarios, linewidth_mhz, run_sweep, sweep_bias_field,
                     sweep_detuning, sweep_intensity, write_outputs)
from .thermometry import (TofSeries, fit_temperature, read_series_csv, series_from_images,
                          write_fit)


def _load_config(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.update("simulation", seed=args.seed)
    if args.n_atoms is not None:
        cfg = cfg.update("simulation", n_atoms=args.n_atoms)
    ctx = cfg.build_context()
    sim = cfg.simulation
    state = init_ensemble(sim.n_atoms, sim.t_init_uk * 1e-6, sim.r_init_um * 1e-6,
                          ctx.transition.species, sim.seed)
    window = None if sim.window_ms is None else sim.window_ms * 1e-3
    res = evolve_to_equilibrium(state, ctx, sim.max_time_ms * 1e-3, window=window,
                                dt=sim.dt_us * 1e-6, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(out / "snapshot.csv", res.state)
    write_history(out / "history.csv", res.history)
    cfg.save(out / "config.ini")
    s = res.stats
    axes = ", ".join(f"{t * 1e6:.2f}" for t in s.temperature_axes)
    print(f"T = {s.temperature * 1e6:.2f} uK (axes {axes}), converged = {s.converged}, "
          f"t = {s.time * 1e3:.2f} ms")
    return 0


def _default_values(param: str, cfg: RunConfig) -> list[float]:
    if param == "detuning":
        return [-d * linewidth_mhz(cfg) for d in DEFAULT_DETUNINGS_GAMMA]
    if param == "intensity":
        return list(DEFAULT_INTENSITIES)
    if param == "bias":
        return list(DEFAULT_BIAS_G)
    return [0.0, 0.008, 0.02, 0.3]


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    values = _floats(args.values) if args.values else _default_values(args.param, cfg)
    if args.n_atoms is not None:
        cfg = cfg.update("simulation", n_atoms=args.n_atoms)
    if args.param == "mismatch":
        report = compare_g_scenarios(cfg, tuple(values), seed=args.seed, reps=args.reps,
                                     workers=args.workers)
        for mm, res in report.results.items():
            write_outputs(args.out, res, name=f"bias_mismatch_{mm:g}")
        Path(args.out, "g_scenarios.txt").write_text("\n".join(report.lines()) + "\n")
        print("\n".join(report.lines()))
        return 0
    spec = SweepSpec(args.param, values, cfg, reps=args.reps, seed=args.seed,
                     full_tof=args.full_tof, model_only=args.model_only, workers=args.workers)
    runner = {"detuning": sweep_detuning, "intensity": sweep_intensity,
              "bias": sweep_bias_field}.get(args.param, run_sweep)
    res = runner(spec)
    write_outputs(args.out, res)
    for row in res.rows:
        flag = "" if row.converged else "  (not converged)"
        print(f"{args.param} = {row.value:g}: T = {row.temperature * 1e6:.2f} "
              f"+/- {row.temperature_err * 1e6:.2f} uK{flag}")
    for k, v in res.extras.items():
        print(f"{k} = {v}")
    return 0


def cmd_tof_fit(args) -> int:
    src = Path(args.input)
    species = get_preset(args.preset).species
    if src.is_dir():
        series, _ = series_from_images(src)
    else:
        series = read_series_csv(src)
    fit = fit_temperature(series, species)
    if args.out:
        write_fit(args.out, fit)
    print(f"T = {fit.temperature * 1e6:.3f} +/- {fit.temperature_err * 1e6:.3f} uK, "
          f"r0 = {fit.r0 * 1e6:.2f} +/- {fit.r0_err * 1e6:.2f} um, quality = {fit.quality}")
    return 0


def cmd_limits(args) -> int:
    presets = load_presets(args.presets)
    names = [args.preset] if args.preset else sorted(presets)
    for name in names:
        if name not in presets:
            raise InvalidInputError(f"unknown preset {name!r}")
        tr = presets[name]
        v_d, v_s = locking_velocities(args.field * GAUSS, tr)
        print(f"[{name}]")
        print(f"  Doppler limit      {doppler_limit(tr) * 1e6:.4g} uK")
        print(f"  recoil limit       {recoil_limit(tr.species, tr.wavelength) * 1e9:.4g} nK")
        print(f"  saturation I       {tr.isat / 10:.4g} mW/cm^2")
        print(f"  g mismatch         {tr.g_mismatch:.3%}")
        print(f"  v_D, v_S at {args.field:g} G  {v_d:.4g}, {v_s:.4g} m/s")
        if args.density is not None:
            psd = phase_space_density(args.density * 1e6, args.temperature * 1e-6, tr.species)
            print(f"  phase-space density ({args.density:g} cm^-3, {args.temperature:g} uK)  {psd:.3g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="equilibrate one ensemble and export it")
    s.add_argument("--config")
    s.add_argument("--out", default="run")
    s.add_argument("--seed", type=int)
    s.add_argument("--n-atoms", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="sweep one parameter")
    s.add_argument("--param", required=True, choices=["detuning", "intensity", "bias", "mismatch"])
    s.add_argument("--values", help="comma or space separated; MHz, S, G or fraction")
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--full-tof", action="store_true")
    s.add_argument("--model-only", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config")
    s.add_argument("--out", default="sweep_out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--n-atoms", type=int)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("tof-fit", help="fit temperature to a radius CSV or an image directory")
    s.add_argument("input")
    s.add_argument("--preset", default="Tm-410.6")
    s.add_argument("--out")
    s.set_defaults(func=cmd_tof_fit)

    s = sub.add_parser("limits", help="print analytic quantities for a preset")
    s.add_argument("preset", nargs="?")
    s.add_argument("--presets", help="alternative preset file")
    s.add_argument("--field", type=float, default=1.0, help="field for locking velocities, G")
    s.add_argument("--density", type=float, help="number density, cm^-3")
    s.add_argument("--temperature", type=float, default=25.0, help="uK")
    s.set_defaults(func=cmd_limits)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, ValueError, OSError) as exc:
        print(f"motsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
