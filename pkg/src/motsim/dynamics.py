"""Langevin ensemble integrator, cloud statistics and ballistic expansion."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .atomkit import AtomSpecies, CoolingTransition, InvalidInputError
from .constants import G_EARTH, KB
from .fieldgeom import BeamSet, FieldConfig
from .forces import ForceModelParams, ForceSample, stability_limit, total_force
from .rng import (
    STREAM_DYNAMICS, STREAM_INIT_POSITION, STREAM_INIT_VELOCITY, atom_normals,
)


class ConfigurationError(ValueError):
    """Raised for integrator settings that cannot produce a valid run."""


@dataclass
class EnsembleState:
    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0
    rng_seed: int = 0
    step_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise InvalidInputError("positions must have shape (N, 3)")
        if self.positions.shape != self.velocities.shape:
            raise InvalidInputError("positions and velocities must match")
        if len(self.positions) < 1:
            raise InvalidInputError("an ensemble needs at least one atom")

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    def copy(self) -> "EnsembleState":
        return replace(self, positions=self.positions.copy(), velocities=self.velocities.copy())


@dataclass
class CloudStats:
    temperature_axes: np.ndarray
    center: np.ndarray
    radius_1e: np.ndarray
    n_atoms: int
    time: float = 0.0
    converged: bool = True

    @property
    def temperature(self) -> float:
        return float(np.mean(self.temperature_axes))


@dataclass(frozen=True)
class ForceContext:
    """Everything the integrator needs to evaluate forces."""

    beams: BeamSet
    field: FieldConfig
    transition: CoolingTransition
    params: ForceModelParams = field(default_factory=ForceModelParams)
    gravity: bool = True

    @property
    def mass(self) -> float:
        return self.transition.mass

    def forces(self, positions, velocities) -> ForceSample:
        return total_force(velocities, positions, self.beams, self.field, self.transition, self.params)

    def max_dt(self) -> float:
        return stability_limit(self.beams, self.transition, self.params)


@dataclass(frozen=True)
class LinearLangevin:
    """F = -alpha v with constant diffusion D on every axis; closed-form reference model.

    Equilibrium k_B T = D / alpha and the velocity-autocorrelation time is m / alpha.
    """

    mass: float
    alpha: float
    diffusion: float
    gravity: bool = False

    def forces(self, positions, velocities) -> ForceSample:
        v = np.asarray(velocities, dtype=float)
        return ForceSample(-self.alpha * v, np.zeros(v.shape[:-1]), np.full(v.shape, self.diffusion))

    def max_dt(self) -> float:
        return math.inf if self.alpha == 0 else 0.1 * self.mass / self.alpha


def init_ensemble(n_atoms: int, temperature: float, radius_1e: float,
                  species: AtomSpecies, seed: int, drift=(0.0, 0.0, 0.0)) -> EnsembleState:
    """Gaussian cloud of 1/e radius `radius_1e` with Maxwell-Boltzmann velocities."""
    if n_atoms < 1:
        raise InvalidInputError("n_atoms must be >= 1")
    if temperature < 0 or not radius_1e > 0:
        raise InvalidInputError("temperature must be >= 0 and radius positive")
    sigma_x = radius_1e / math.sqrt(2)
    sigma_v = math.sqrt(KB * temperature / species.mass)
    pos = sigma_x * atom_normals(seed, STREAM_INIT_POSITION, 0, 0, n_atoms)
    vel = sigma_v * atom_normals(seed, STREAM_INIT_VELOCITY, 0, 0, n_atoms)
    vel = vel + np.asarray(drift, dtype=float)
    return EnsembleState(pos, vel, 0.0, int(seed), 0)


def _advance(pos, vel, ctx: ForceContext, dt: float, noise: np.ndarray):
    m = ctx.mass
    fs = ctx.forces(pos, vel)
    vel = vel + fs.force * (dt / m) + np.sqrt(2.0 * fs.diffusion * dt) / m * noise
    if ctx.gravity:
        vel[:, 2] -= G_EARTH * dt
    pos = pos + vel * dt
    return pos, vel


def step(state: EnsembleState, dt: float, ctx: ForceContext, workers: int = 1) -> EnsembleState:
    """One Euler-Maruyama step.  Atoms are independent so `workers` only affects speed."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    limit = ctx.max_dt()
    if dt > limit:
        raise ConfigurationError(f"dt = {dt:.3g} s exceeds the stability bound {limit:.3g} s")
    n = state.n_atoms
    seed, k = state.rng_seed, state.step_index
    if workers <= 1 or n < 2 * workers:
        noise = atom_normals(seed, STREAM_DYNAMICS, k, 0, n)
        pos, vel = _advance(state.positions, state.velocities, ctx, dt, noise)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        pos = np.empty_like(state.positions)
        vel = np.empty_like(state.velocities)

        def work(a, b):
            noise = atom_normals(seed, STREAM_DYNAMICS, k, a, b)
            pos[a:b], vel[a:b] = _advance(state.positions[a:b], state.velocities[a:b], ctx, dt, noise)

        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(work, bounds[:-1], bounds[1:]))
    return EnsembleState(pos, vel, state.time + dt, seed, k + 1)


def run(state: EnsembleState, ctx: ForceContext, duration: float, dt: float,
        workers: int = 1) -> EnsembleState:
    n_steps = int(round(duration / dt))
    for _ in range(n_steps):
        state = step(state, dt, ctx, workers)
    return state


def cloud_stats(state: EnsembleState, species: AtomSpecies) -> CloudStats:
    """Kinetic temperature (per-axis velocity variance) and 1/e cloud radius."""
    if state.n_atoms < 2:
        raise InvalidInputError("cloud statistics need at least two atoms")
    t_axes = species.mass * np.var(state.velocities, axis=0) / KB
    center = state.positions.mean(axis=0)
    radius = math.sqrt(2) * state.positions.std(axis=0)
    return CloudStats(t_axes, center, radius, state.n_atoms, state.time)


def relaxation_time(ctx: ForceContext) -> float:
    """Velocity damping time m / alpha at zero velocity and zero field.

    Uses the Doppler channel alone when it is enabled: it sets the slowest
    relaxation whenever sub-Doppler cooling is inhibited.
    """
    v = np.array([[1e-4, 0.0, 0.0], [-1e-4, 0.0, 0.0]])
    x = np.zeros((2, 3))
    params = ctx.params
    if params.doppler:
        params = replace(params, subdoppler=False)
    zero_field = replace(ctx, field=FieldConfig(), params=params)
    f = zero_field.forces(x, v).force[:, 0]
    alpha = -(f[0] - f[1]) / 2e-4
    if alpha <= 0:
        return math.inf
    return ctx.mass / alpha


@dataclass
class EquilibriumResult:
    state: EnsembleState
    stats: CloudStats
    history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.stats.converged


def evolve_to_equilibrium(state: EnsembleState, ctx: ForceContext, max_time: float,
                          window: float | None = None, dt: float = 1e-6,
                          tolerance: float = 0.02, sample_every: int = 10,
                          workers: int = 1) -> EquilibriumResult:
    """Integrate until the window-averaged temperature stops drifting.

    Convergence: two consecutive windows whose mean temperatures differ by less
    than `tolerance` (relative).  The returned stats carry the per-axis
    temperatures averaged over the last window and a convergence flag.
    """
    if not max_time > 0:
        raise InvalidInputError("max_time must be positive")
    species = ctx.transition.species
    if window is None:
        tau = relaxation_time(ctx)
        window = 1e-3 if not math.isfinite(tau) else max(0.5e-3, 2.0 * tau)
    steps_per_window = max(sample_every, int(round(window / dt)))
    n_windows_max = max(2, int(math.ceil(max_time / (steps_per_window * dt))))
    history = []
    previous = None
    converged = False
    last = None
    for _ in range(n_windows_max):
        samples = []
        for i in range(steps_per_window):
            state = step(state, dt, ctx, workers)
            if (i + 1) % sample_every == 0:
                samples.append(species.mass * np.var(state.velocities, axis=0) / KB)
        last = np.mean(samples, axis=0)
        t_mean = float(np.mean(last))
        history.append((state.time, t_mean, float(np.mean(math.sqrt(2) * state.positions.std(axis=0)))))
        if previous is not None and previous > 0:
            if abs(t_mean - previous) / previous < tolerance:
                converged = True
                break
        previous = t_mean
    stats = cloud_stats(state, species)
    stats.temperature_axes = last
    stats.converged = converged
    return EquilibriumResult(state, stats, history)


def ballistic_expand(state: EnsembleState, dt: float, gravity: bool = True) -> EnsembleState:
    """Free flight for `dt` seconds, exact under constant gravity."""
    if dt < 0:
        raise InvalidInputError("expansion time must be non-negative")
    pos = state.positions + state.velocities * dt
    vel = state.velocities.copy()
    if gravity and dt > 0:
        pos[:, 2] -= 0.5 * G_EARTH * dt**2
        vel[:, 2] -= G_EARTH * dt
    return EnsembleState(pos, vel, state.time + dt, state.rng_seed, state.step_index)


def write_snapshot(path, state: EnsembleState) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y", "z", "vx", "vy", "vz"])
        for i, (p, v) in enumerate(zip(state.positions, state.velocities)):
            w.writerow([i, *(repr(float(c)) for c in p), *(repr(float(c)) for c in v)])


def read_snapshot(path, time: float = 0.0, seed: int = 0) -> EnsembleState:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return EnsembleState(data[:, 1:4], data[:, 4:7], time, seed)


def write_history(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_ms", "temperature_uK", "radius_um"])
        for t, temp, r in history:
            w.writerow([f"{t * 1e3:.6g}", f"{temp * 1e6:.6g}", f"{r * 1e6:.6g}"])
