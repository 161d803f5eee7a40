"""CODATA physical constants (SI) used throughout the package."""

from dataclasses import dataclass

from scipy import constants as _c


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _c.hbar
    h: float = _c.h
    k_B: float = _c.k
    mu_B: float = _c.physical_constants["Bohr magneton"][0]
    amu: float = _c.atomic_mass
    g: float = _c.g


CONST = PhysicalConstants()

HBAR = CONST.hbar
H = CONST.h
KB = CONST.k_B
MU_B = CONST.mu_B
AMU = CONST.amu
G_EARTH = CONST.g

# unit helpers: multiply a value in the named unit to get SI
UK = 1e-6  # microkelvin -> K
MM = 1e-3
UM = 1e-6
MS = 1e-3
US = 1e-6
GAUSS = 1e-4  # G -> T
GAUSS_PER_CM = 1e-2  # G/cm -> T/m
MW_PER_CM2 = 10.0  # mW/cm^2 -> W/m^2
MHZ = 1e6
