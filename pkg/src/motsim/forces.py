"""Doppler, sub-Doppler and combined force/diffusion models.

Every function accepts a single atom (velocity shape (3,)) or an ensemble
((N, 3)); the returned ForceSample has matching leading shape.  Diffusion is
reported per axis, in (kg m/s)^2/s, with the convention that momentum variance
grows as 2*D*t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atomkit import CoolingTransition, InvalidInputError
from .constants import HBAR, KB, MU_B
from .fieldgeom import BeamSet, FieldConfig, field_at


@dataclass(frozen=True)
class ForceModelParams:
    """Parameters of the sub-Doppler channel plus channel switches.

    The sub-Doppler friction is ``subdoppler_strength * hbar k^2`` and acts
    within ``subdoppler_capture`` (m/s) of the sub-Doppler locking velocity.
    Its equilibrium temperature is
    ``subdoppler_temperature_constant * hbar gamma^2 s / (8 F |delta| k_B) + heating_offset``.
    The default calibration is our own, not a measured one.
    """

    subdoppler_strength: float = 0.2
    subdoppler_capture: float = 0.07
    subdoppler_temperature_constant: float = 1.0
    heating_offset: float = 2e-6
    doppler: bool = True
    subdoppler: bool = True

    def __post_init__(self):
        if not self.subdoppler_capture > 0:
            raise InvalidInputError("subdoppler_capture must be positive")
        if self.subdoppler_strength < 0:
            raise InvalidInputError("subdoppler_strength must be non-negative")
        if not self.subdoppler_temperature_constant > 0:
            raise InvalidInputError("subdoppler_temperature_constant must be positive")
        if self.heating_offset < 0:
            raise InvalidInputError("heating_offset must be non-negative")


@dataclass
class ForceSample:
    force: np.ndarray
    scatter_rate: np.ndarray
    diffusion: np.ndarray

    def __add__(self, other: "ForceSample") -> "ForceSample":
        return ForceSample(
            self.force + other.force,
            self.scatter_rate + other.scatter_rate,
            self.diffusion + other.diffusion,
        )


def _zero_sample(shape) -> ForceSample:
    lead = shape[:-1]
    return ForceSample(np.zeros(shape), np.zeros(lead), np.zeros(shape))


def beam_scatter_rates(v, B, beams: BeamSet, transition: CoolingTransition) -> np.ndarray:
    """Photon scattering rate from each beam, shape (..., n_beams)."""
    v = np.asarray(v, dtype=float)
    B = np.broadcast_to(np.asarray(B, dtype=float), v.shape)
    gamma = transition.linewidth
    k = transition.k
    d = beams.directions
    s = beams.saturations
    doppler = k * (v @ d.T)
    zeeman = transition.g_upper * MU_B * (B @ beams.zeeman_axes().T) / HBAR
    delta_eff = beams.detunings - doppler - zeeman
    return 0.5 * gamma * s / (1 + beams.s_total + (2 * delta_eff / gamma) ** 2)


def doppler_force(v, B, beams: BeamSet, transition: CoolingTransition) -> ForceSample:
    """Radiation-pressure force of all beams with Doppler and Zeeman shifts."""
    v = np.asarray(v, dtype=float)
    rates = beam_scatter_rates(v, B, beams, transition)
    hk = HBAR * transition.k
    d = beams.directions
    force = hk * (rates @ d)
    total = rates.sum(axis=-1)
    # absorption kicks along each beam plus isotropic spontaneous emission
    absorption = rates @ (d**2)
    diffusion = 0.5 * hk**2 * (absorption + total[..., None] / 3.0)
    return ForceSample(force, total, diffusion)


def mean_detuning(beams: BeamSet) -> float:
    return float(np.mean(np.abs(beams.detunings)))


def subdoppler_temperature(beams: BeamSet, transition: CoolingTransition,
                           params: ForceModelParams) -> float:
    """Equilibrium temperature of the sub-Doppler channel alone."""
    delta = mean_detuning(beams)
    if delta == 0:
        raise InvalidInputError("sub-Doppler model diverges at zero detuning")
    gamma = transition.linewidth
    scale = HBAR * gamma**2 * beams.s_total / (8 * transition.f_lower * delta * KB)
    return params.subdoppler_temperature_constant * scale + params.heating_offset


def subdoppler_friction(beams: BeamSet, transition: CoolingTransition,
                        params: ForceModelParams) -> float:
    if beams.s_total == 0:
        return 0.0
    return params.subdoppler_strength * HBAR * transition.k**2


def subdoppler_locking_velocity(B, beams: BeamSet, transition: CoolingTransition) -> np.ndarray:
    """Per-axis sub-Doppler locking velocity for the polarization layout of `beams`."""
    B = np.asarray(B, dtype=float)
    return -beams.axis_sign() * transition.g_lower * MU_B * B / (HBAR * transition.k)


def doppler_locking_velocity(B, beams: BeamSet, transition: CoolingTransition) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    return -beams.axis_sign() * transition.g_upper * MU_B * B / (HBAR * transition.k)


def subdoppler_force(v, B, beams: BeamSet, transition: CoolingTransition,
                     params: ForceModelParams) -> ForceSample:
    """Saturable friction toward the sub-Doppler locking velocity, per axis."""
    v = np.asarray(v, dtype=float)
    t_eq = subdoppler_temperature(beams, transition, params)
    alpha = subdoppler_friction(beams, transition, params)
    u = v - subdoppler_locking_velocity(B, beams, transition)
    vc = params.subdoppler_capture
    force = -alpha * u / (1 + (u / vc) ** 2)
    diffusion = np.full(v.shape, alpha * KB * t_eq)
    return ForceSample(force, np.zeros(v.shape[:-1]), diffusion)


def total_force(v, position, beams: BeamSet, fieldcfg: FieldConfig,
                transition: CoolingTransition, params: ForceModelParams) -> ForceSample:
    v = np.asarray(v, dtype=float)
    B = field_at(position, fieldcfg)
    out = _zero_sample(v.shape)
    if params.doppler:
        out = out + doppler_force(v, B, beams, transition)
    if params.subdoppler:
        out = out + subdoppler_force(v, B, beams, transition, params)
    return out


def max_doppler_friction(beams: BeamSet, transition: CoolingTransition) -> float:
    """Upper bound on the Doppler friction coefficient of one beam pair."""
    s_tot = beams.s_total
    s1 = float(beams.saturations.max())
    x = np.sqrt((1 + s_tot) / 3)
    return 8 * HBAR * transition.k**2 * s1 * x / (1 + s_tot + x**2) ** 2


def max_doppler_force(beams: BeamSet, transition: CoolingTransition) -> float:
    s_tot = beams.s_total
    return HBAR * transition.k * 0.5 * transition.linewidth * float(beams.saturations.max()) / (1 + s_tot)


def stability_limit(beams: BeamSet, transition: CoolingTransition,
                    params: ForceModelParams) -> float:
    """Largest Euler-Maruyama step allowed for this force model (s)."""
    m = transition.mass
    alpha = 0.0
    limits = []
    if params.doppler:
        alpha += max_doppler_friction(beams, transition)
        fmax = max_doppler_force(beams, transition)
        if fmax > 0:
            # velocity kick per step must stay well inside the Doppler width
            limits.append(0.1 * m * 0.5 * transition.linewidth / transition.k / fmax)
    if params.subdoppler:
        alpha += subdoppler_friction(beams, transition, params)
    if alpha > 0:
        limits.append(0.1 * m / alpha)
    return min(limits) if limits else np.inf
