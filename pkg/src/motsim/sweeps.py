"""Parameter sweeps over detuning, intensity, bias field and g-factor mismatch.

Per-point seeds are derived from (master seed, point index, repetition), so a
sweep gives identical output whatever the worker count or evaluation order.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .atomkit import InvalidInputError, doppler_limit, doppler_temperature, get_preset, locking_velocities
from .config import RunConfig
from .dynamics import evolve_to_equilibrium, init_ensemble
from .forces import subdoppler_temperature
from .rng import derive_seed
from .thermometry import measure_tof, probe_scatter_rate

PARAMS = {
    "detuning": ("MHz", "laser detuning, negative is red"),
    "intensity": ("S", "total saturation parameter"),
    "bias": ("G", "uniform bias field magnitude"),
    "mismatch": ("1", "relative g-factor mismatch (g_lower - g_upper)/g_lower"),
}

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: Sequence[float]
    base: RunConfig = field(default_factory=RunConfig)
    reps: int = 1
    seed: int = 0
    full_tof: bool = False
    model_only: bool = False
    workers: int = 1
    estimator: str = "mean"  # mean | x | y | z
    bias_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.param not in PARAMS:
            raise InvalidInputError(f"unknown sweep parameter {self.param!r}")
        if len(self.values) < 2:
            raise InvalidInputError("a sweep needs at least two values")
        if self.reps < 1:
            raise InvalidInputError("reps must be >= 1")
        if self.estimator not in ("mean", *AXIS_INDEX):
            raise InvalidInputError(f"unknown estimator {self.estimator!r}")


@dataclass
class PointResult:
    temperature: float
    temperature_axes: tuple
    converged: bool
    seed: int
    tof_temperature: float | None = None


@dataclass
class SweepRow:
    value: float
    temperature: float
    temperature_err: float
    n_converged: int
    reps: int
    doppler_theory: float
    subdoppler_model: float
    temperature_axes: tuple
    seeds: tuple
    config_hash: str

    @property
    def converged(self) -> bool:
        return self.n_converged == self.reps


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    extras: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([r.temperature for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.temperature_err for r in self.rows])


def apply_param(cfg: RunConfig, param: str, value: float,
                bias_direction=(0.0, 0.0, 1.0)) -> RunConfig:
    if param == "detuning":
        if value == 0:
            raise InvalidInputError("detuning must be nonzero")
        return cfg.update("beams", detuning_mhz=float(value))
    if param == "intensity":
        if value <= 0:
            raise InvalidInputError("intensity must be positive")
        return cfg.update("beams", saturation_total=float(value))
    if param == "bias":
        if value < 0:
            raise InvalidInputError("bias magnitude must be non-negative")
        d = np.asarray(bias_direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cfg.update("field", bias_g=tuple(float(value) * d))
    if param == "mismatch":
        return cfg.update("transition", mismatch=float(value))
    raise InvalidInputError(f"unknown sweep parameter {param!r}")


def overlays(cfg: RunConfig) -> tuple[float, float]:
    """Low-intensity Doppler temperature and the sub-Doppler model curve, K."""
    tr = cfg.build_transition()
    beams = cfg.build_beams()
    delta = abs(float(beams.detunings[0]))
    t_doppler = doppler_temperature(delta, tr) if delta > 0 else math.nan
    t_sub = subdoppler_temperature(beams, tr, cfg.build_params())
    return t_doppler, t_sub


def _estimate(axes, estimator: str) -> float:
    if estimator == "mean":
        return float(np.mean(axes))
    return float(axes[AXIS_INDEX[estimator]])


def run_point(cfg: RunConfig, seed: int, full_tof: bool = False, estimator: str = "mean") -> PointResult:
    """Equilibrate one ensemble and measure its temperature."""
    ctx = cfg.build_context()
    tr = ctx.transition
    sim = cfg.simulation
    drift = (0.0, 0.0, 0.0)
    if sim.start_at_doppler_velocity:
        from .forces import doppler_locking_velocity
        drift = tuple(doppler_locking_velocity(ctx.field.bias_vector, ctx.beams, tr))
    state = init_ensemble(sim.n_atoms, sim.t_init_uk * 1e-6, sim.r_init_um * 1e-6,
                          tr.species, seed, drift=drift)
    window = None if sim.window_ms is None else sim.window_ms * 1e-3
    res = evolve_to_equilibrium(state, ctx, sim.max_time_ms * 1e-3, window=window,
                                dt=sim.dt_us * 1e-6)
    axes = tuple(float(t) for t in res.stats.temperature_axes)
    t_kin = _estimate(axes, estimator)
    t_tof = None
    if full_tof:
        cam = cfg.camera
        m = measure_tof(res.state, tr.species, np.asarray(cam.tof_grid_ms) * 1e-3,
                        cfg.build_camera(), probe_scatter_rate(tr, cfg.probe_intensity),
                        exposure=cam.exposure_us * 1e-6, shot_noise=cam.shot_noise,
                        seed=seed, gravity=sim.gravity)
        t_tof = m.fit.temperature
    return PointResult(t_tof if full_tof else t_kin, axes, res.converged, seed, t_tof)


def _job(args):
    cfg, seed, full_tof, estimator = args
    return run_point(cfg, seed, full_tof, estimator)


def point_seed(master: int, index: int, rep: int) -> int:
    return derive_seed(master, index, rep)


def run_sweep(spec: SweepSpec) -> SweepResult:
    configs = [apply_param(spec.base, spec.param, v, spec.bias_direction) for v in spec.values]
    rows = []
    if spec.model_only:
        for v, cfg in zip(spec.values, configs):
            t_d, t_s = overlays(cfg)
            rows.append(SweepRow(float(v), t_s, 0.0, 1, 1, t_d, t_s, (t_s,) * 3, (), cfg.digest()))
        return SweepResult(spec, rows)

    jobs = []
    for i, cfg in enumerate(configs):
        for r in range(spec.reps):
            jobs.append((cfg, point_seed(spec.seed, i, r), spec.full_tof, spec.estimator))
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    n_atoms = spec.base.simulation.n_atoms
    n_axes = 3 if spec.estimator == "mean" else 1
    for i, (v, cfg) in enumerate(zip(spec.values, configs)):
        pts = results[i * spec.reps:(i + 1) * spec.reps]
        temps = np.array([p.temperature for p in pts])
        t_mean = float(temps.mean())
        if spec.reps > 1:
            err = float(temps.std(ddof=1) / math.sqrt(spec.reps))
        else:
            # chi-squared spread of a variance estimate from N * n_axes samples
            err = t_mean * math.sqrt(2.0 / (n_atoms * n_axes))
        axes = tuple(float(a) for a in np.mean([p.temperature_axes for p in pts], axis=0))
        t_d, t_s = overlays(cfg)
        rows.append(SweepRow(float(v), t_mean, err, sum(p.converged for p in pts), spec.reps,
                             t_d, t_s, axes, tuple(p.seed for p in pts), cfg.digest()))
    return SweepResult(spec, rows)


# --- the individual experiments ---------------------------------------------

DEFAULT_DETUNINGS_GAMMA = tuple(np.round(np.linspace(0.5, 3.0, 12), 6))
DEFAULT_INTENSITIES = tuple(np.round(np.linspace(0.2, 3.0, 10), 6))
DEFAULT_BIAS_G = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
G_SCENARIOS = (0.0, 0.008, 0.02, 0.3)


def linewidth_mhz(cfg: RunConfig) -> float:
    return cfg.build_transition().linewidth / (2 * math.pi * 1e6)


def sweep_detuning(spec: SweepSpec) -> SweepResult:
    for v in spec.values:
        if not v < 0:
            raise InvalidInputError("detuning sweep expects red (negative) detunings in MHz")
    res = run_sweep(spec)
    i = int(np.argmin(res.temperatures))
    res.extras.update(min_detuning_mhz=res.rows[i].value, min_temperature=res.rows[i].temperature)
    return res


def weighted_line(x, y, err=None):
    """Weighted least-squares y = a x + b; returns slope, intercept and R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if err is None or np.all(np.asarray(err) == 0) else 1.0 / np.asarray(err) ** 2
    A = np.column_stack([x, np.ones_like(x)]) * np.sqrt(w)[:, None]
    (a, b), *_ = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)
    yhat = a * x + b
    ybar = np.sum(w * y) / np.sum(w)
    ss_res = float(np.sum(w * (y - yhat) ** 2))
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def sweep_intensity(spec: SweepSpec, fit_min: float | None = None) -> SweepResult:
    """Temperature vs total saturation parameter with a linear fit T = a S + b."""
    res = run_sweep(spec)
    x, y, e = res.values, res.temperatures, res.errors
    keep = np.ones(len(x), bool) if fit_min is None else x >= fit_min
    a, b, r2 = weighted_line(x[keep], y[keep], e[keep])
    res.extras.update(slope=a, intercept=b, r2=r2, fit_min=fit_min)
    return res


def bias_base(cfg: RunConfig) -> RunConfig:
    """Molasses (no gradient) with the ensemble started at the Doppler locking velocity."""
    return cfg.update("field", gradient_g_cm=0.0).update(
        "simulation", start_at_doppler_velocity=True).update("forces", subdoppler=True)


def half_field(values, temps, t_zero: float, t_plateau: float) -> float:
    """First field where T crosses halfway from T(0) to the Doppler plateau (linear interpolation)."""
    target = 0.5 * (t_zero + t_plateau)
    for i in range(1, len(values)):
        if temps[i] >= target:
            t0, t1 = temps[i - 1], temps[i]
            b0, b1 = values[i - 1], values[i]
            if t1 == t0:
                return float(b1)
            return float(b0 + (target - t0) * (b1 - b0) / (t1 - t0))
    return math.inf


def sweep_bias_field(spec: SweepSpec) -> SweepResult:
    """Equilibrium temperature along the bias direction vs bias magnitude."""
    if any(v < 0 for v in spec.values):
        raise InvalidInputError("field values must be non-negative")
    axis = int(np.argmax(np.abs(spec.bias_direction)))
    estimator = spec.estimator if spec.estimator != "mean" else "xyz"[axis]
    spec = replace(spec, base=bias_base(spec.base), estimator=estimator)
    res = run_sweep(spec)
    plateau_spec = replace(spec, param="bias", values=(0.0, 0.0), reps=1,
                           base=spec.base.update("forces", subdoppler=False))
    plateau_cfg = apply_param(plateau_spec.base, "bias", 0.0)
    t_plateau = run_point(plateau_cfg, point_seed(spec.seed, 10_000, 0), spec.full_tof,
                          estimator).temperature
    values, temps = res.values, res.temperatures
    if 0.0 in values:
        t_zero = float(temps[list(values).index(0.0)])
    else:
        t_zero = run_point(apply_param(spec.base, "bias", 0.0), point_seed(spec.seed, 0, 0),
                           spec.full_tof, estimator).temperature
    res.extras.update(t_zero=t_zero, t_plateau=t_plateau,
                      b_half_g=half_field(values, temps, t_zero, t_plateau))
    return res


@dataclass
class GScenarioReport:
    results: dict  # mismatch -> SweepResult
    b_half: dict
    ordering_ok: bool
    no_suppression_at_zero: bool
    transitions: dict

    def lines(self) -> list[str]:
        out = []
        for mm, bh in self.b_half.items():
            r = self.results[mm]
            out.append(f"mismatch {mm:.3%}: B_half = {bh:.3g} G, T(0) = {r.extras['t_zero'] * 1e6:.1f} uK, "
                       f"Doppler plateau = {r.extras['t_plateau'] * 1e6:.1f} uK")
        out.append(f"B_half ordering (inverse in mismatch): {'ok' if self.ordering_ok else 'VIOLATED'}")
        for name, t in self.transitions.items():
            out.append(f"{name}: Doppler limit {t['doppler_limit_uK']:.3g} uK, "
                       f"g mismatch {t['g_mismatch']:.2%}")
        return out


def compare_g_scenarios(base: RunConfig | None = None, mismatches=G_SCENARIOS,
                        fields=DEFAULT_BIAS_G, seed: int = 0, reps: int = 1,
                        workers: int = 1) -> GScenarioReport:
    base = base or RunConfig()
    results, b_half = {}, {}
    for mm in mismatches:
        spec = SweepSpec("bias", fields, base.update("transition", mismatch=mm), reps=reps,
                         seed=seed, workers=workers)
        res = sweep_bias_field(spec)
        results[mm] = res
        b_half[mm] = res.extras["b_half_g"]
    nonzero = sorted(m for m in mismatches if m > 0)
    ordering = all(b_half[a] > b_half[b] for a, b in zip(nonzero, nonzero[1:]))
    zero_ok = True
    if 0.0 in results:
        zero_ok = math.isinf(b_half[0.0])
    transitions = {}
    for name in ("Tm-410.6", "Tm-530.7"):
        tr = get_preset(name)
        transitions[name] = {"doppler_limit_uK": doppler_limit(tr) * 1e6, "g_mismatch": tr.g_mismatch}
    return GScenarioReport(results, b_half, ordering, zero_ok, transitions)


# --- output ------------------------------------------------------------------

CSV_FIELDS = ["param", "value", "unit", "temperature_uK", "temperature_err_uK", "T_x_uK",
              "T_y_uK", "T_z_uK", "converged", "n_converged", "reps", "doppler_theory_uK",
              "subdoppler_model_uK", "estimator", "config_hash", "seeds"]


def _g(x: float) -> str:
    return f"{x:.10g}"


def write_sweep_csv(path, result: SweepResult) -> None:
    spec = result.spec
    unit = PARAMS[spec.param][0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in result.rows:
            w.writerow([spec.param, _g(r.value), unit, _g(r.temperature * 1e6),
                        _g(r.temperature_err * 1e6), *(_g(a * 1e6) for a in r.temperature_axes),
                        int(r.converged), r.n_converged, r.reps, _g(r.doppler_theory * 1e6),
                        _g(r.subdoppler_model * 1e6),
                        "model" if spec.model_only else ("tof" if spec.full_tof else spec.estimator),
                        r.config_hash, ";".join(str(s) for s in r.seeds)])


def write_plot_data(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "yerr", "doppler_theory", "subdoppler_model"])
        for r in result.rows:
            w.writerow([_g(r.value), _g(r.temperature * 1e6), _g(r.temperature_err * 1e6),
                        _g(r.doppler_theory * 1e6), _g(r.subdoppler_model * 1e6)])


def write_manifest(path, result: SweepResult) -> None:
    spec = result.spec
    manifest = {
        "package": "motsim",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "sweep": {"param": spec.param, "values": [float(v) for v in spec.values],
                  "reps": spec.reps, "master_seed": spec.seed, "full_tof": spec.full_tof,
                  "model_only": spec.model_only, "estimator": spec.estimator},
        "config": spec.base.to_ini(),
        "config_hash": spec.base.digest(),
        "subdoppler_calibration": {
            "temperature_constant": spec.base.forces.subdoppler_temperature_constant,
            "heating_offset_uK": spec.base.forces.heating_offset_uk,
            "strength_hbar_k2": spec.base.forces.subdoppler_strength,
            "capture_m_s": spec.base.forces.subdoppler_capture_m_s,
            "note": "model calibration chosen for this simulator, not fitted to data",
        },
        "extras": {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                   for k, v in result.extras.items()},
        "rows": [{"value": r.value, "seeds": list(r.seeds), "config_hash": r.config_hash}
                 for r in result.rows],
    }
    Path(path).write_text(json.dumps(manifest, indent=2))


def write_outputs(out_dir, result: SweepResult, name: str | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = name or result.spec.param
    write_sweep_csv(out / f"sweep_{name}.csv", result)
    write_plot_data(out / f"plot_{name}.csv", result)
    write_manifest(out / f"manifest_{name}.json", result)
    return out
