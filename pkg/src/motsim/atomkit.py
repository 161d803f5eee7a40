"""Atomic species, cooling transitions and closed-form cooling-theory quantities.

Conventions: linewidths and detunings passed to these functions are angular
frequencies (rad/s). Presets and config files use ordinary frequencies in MHz
and are converted on load.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import AMU, HBAR, H, KB, MHZ, MU_B, MW_PER_CM2


class InvalidInputError(ValueError):
    """Raised when a physical input is outside the domain of a formula."""


@dataclass(frozen=True)
class AtomSpecies:
    name: str
    mass: float  # kg

    def __post_init__(self):
        if not self.mass > 0:
            raise InvalidInputError(f"mass must be positive, got {self.mass}")

    @classmethod
    def from_amu(cls, name: str, mass_u: float) -> "AtomSpecies":
        return cls(name, mass_u * AMU)


@dataclass(frozen=True)
class CoolingTransition:
    """Two-level cooling transition with the Zeeman data of both levels.

    `linewidth` is gamma in rad/s, `isat` in W/m^2.
    """

    wavelength: float
    linewidth: float
    g_lower: float
    g_upper: float
    f_lower: float
    f_upper: float
    isat: float
    species: AtomSpecies
    name: str = ""

    def __post_init__(self):
        for attr in ("wavelength", "linewidth", "isat"):
            if not getattr(self, attr) > 0:
                raise InvalidInputError(f"{attr} must be positive, got {getattr(self, attr)}")

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def mass(self) -> float:
        return self.species.mass

    @property
    def g_mismatch(self) -> float:
        """Relative g-factor difference (g_lower - g_upper) / g_lower."""
        return (self.g_lower - self.g_upper) / self.g_lower

    def with_mismatch(self, mismatch: float) -> "CoolingTransition":
        """Copy with g_upper = g_lower * (1 - mismatch)."""
        return replace(self, g_upper=self.g_lower * (1.0 - mismatch))


def doppler_limit(transition: CoolingTransition) -> float:
    """Doppler limit hbar*gamma/(2 k_B) in K."""
    gamma = transition.linewidth
    if not gamma > 0:
        raise InvalidInputError("linewidth must be positive")
    return HBAR * gamma / (2 * KB)


def doppler_temperature(detuning: float, transition: CoolingTransition) -> float:
    """Low-intensity Doppler equilibrium temperature for red detuning `detuning` > 0 (rad/s)."""
    if not detuning > 0:
        raise InvalidInputError("detuning must be a positive red-detuning magnitude")
    gamma = transition.linewidth
    return doppler_limit(transition) * (detuning**2 + gamma**2 / 4) / (gamma * detuning)


def recoil_limit(species: AtomSpecies, wavelength: float) -> float:
    """Recoil temperature h^2 / (2 lambda^2 m k_B)."""
    if not wavelength > 0:
        raise InvalidInputError("wavelength must be positive")
    return H**2 / (2 * wavelength**2 * species.mass * KB)


def saturation_parameter(intensity: float, transition: CoolingTransition) -> float:
    if intensity < 0:
        raise InvalidInputError("intensity must be non-negative")
    return intensity / transition.isat


def locking_velocities(B, transition: CoolingTransition):
    """Velocities (v_D, v_S) at which the Doppler and sub-Doppler forces vanish.

    Accepts a scalar field or an array of field components (T); the result has
    the same shape.
    """
    scale = MU_B * np.asarray(B, dtype=float) / (HBAR * transition.k)
    v_d = -transition.g_upper * scale
    v_s = -transition.g_lower * scale
    if np.ndim(v_d) == 0:
        return float(v_d), float(v_s)
    return v_d, v_s


def de_broglie_wavelength(temperature: float, species: AtomSpecies) -> float:
    return H / math.sqrt(2 * math.pi * species.mass * KB * temperature)


def phase_space_density(density: float, temperature: float, species: AtomSpecies) -> float:
    """n * lambda_dB^3 with n in m^-3."""
    if not density > 0 or not temperature > 0:
        raise InvalidInputError("density and temperature must be positive")
    return density * de_broglie_wavelength(temperature, species) ** 3


def thermal_velocity(temperature: float, mass: float) -> float:
    """One-axis rms velocity sqrt(k_B T / m)."""
    return math.sqrt(KB * temperature / mass)


# --- presets ---------------------------------------------------------------

_PRESET_KEYS = (
    "species", "mass_u", "wavelength_nm", "linewidth_mhz", "g_lower",
    "g_upper", "f_lower", "f_upper", "isat_mw_cm2",
)


def transition_from_section(name: str, section) -> CoolingTransition:
    missing = [k for k in _PRESET_KEYS if k not in section]
    if missing:
        raise InvalidInputError(f"preset {name!r} is missing keys: {', '.join(missing)}")
    species = AtomSpecies.from_amu(section["species"], float(section["mass_u"]))
    return CoolingTransition(
        wavelength=float(section["wavelength_nm"]) * 1e-9,
        linewidth=2 * math.pi * float(section["linewidth_mhz"]) * MHZ,
        g_lower=float(section["g_lower"]),
        g_upper=float(section["g_upper"]),
        f_lower=float(section["f_lower"]),
        f_upper=float(section["f_upper"]),
        isat=float(section["isat_mw_cm2"]) * MW_PER_CM2,
        species=species,
        name=name,
    )


def transition_to_section(tr: CoolingTransition) -> dict:
    return {
        "species": tr.species.name,
        "mass_u": repr(tr.mass / AMU),
        "wavelength_nm": repr(tr.wavelength * 1e9),
        "linewidth_mhz": repr(tr.linewidth / (2 * math.pi * MHZ)),
        "g_lower": repr(tr.g_lower),
        "g_upper": repr(tr.g_upper),
        "f_lower": repr(tr.f_lower),
        "f_upper": repr(tr.f_upper),
        "isat_mw_cm2": repr(tr.isat / MW_PER_CM2),
    }


def load_presets(path: str | Path | None = None) -> dict[str, CoolingTransition]:
    """Read transition presets from an INI file (the bundled one by default)."""
    parser = configparser.ConfigParser()
    if path is None:
        parser.read_string(resources.files("motsim").joinpath("presets.ini").read_text())
    else:
        with open(path) as fh:
            parser.read_file(fh)
    return {name: transition_from_section(name, parser[name]) for name in parser.sections()}


def get_preset(name: str, path: str | Path | None = None) -> CoolingTransition:
    presets = load_presets(path)
    try:
        return presets[name]
    except KeyError:
        raise InvalidInputError(f"unknown preset {name!r}; available: {', '.join(presets)}") from None
