"""Semiclassical Monte Carlo simulator of Doppler and sub-Doppler cooling in a MOT."""

__version__ = "0.1.0"

from .atomkit import (AtomSpecies, CoolingTransition, InvalidInputError, doppler_limit,
                      doppler_temperature, get_preset, load_presets, locking_velocities,
                      phase_space_density, recoil_limit)
from .config import RunConfig
from .dynamics import EnsembleState, evolve_to_equilibrium, init_ensemble
from .thermometry import fit_gaussian, fit_temperature, measure_tof, render_image

__all__ = [
    "AtomSpecies", "CoolingTransition", "EnsembleState", "InvalidInputError", "RunConfig",
    "doppler_limit", "doppler_temperature", "evolve_to_equilibrium", "fit_gaussian",
    "fit_temperature", "get_preset", "init_ensemble", "load_presets", "locking_velocities",
    "measure_tof", "phase_space_density", "recoil_limit", "render_image",
]
