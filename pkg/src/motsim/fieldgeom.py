"""Six-beam MOT geometry and the quadrupole-plus-bias magnetic field.

Sign conventions
----------------
Beam detuning is stored signed, omega_laser - omega_atom, so red detuning is
negative.  ``helicity`` is the circular polarization label (sigma+ = +1,
sigma- = -1) referred to the positive lab axis of the beam's pair, which is the
usual way MOT optics are labelled.  Opposite beams therefore carry opposite
labels.  In the standard layout the axial (z) pair is (+z: sigma+, -z: sigma-)
and the radial pairs are reversed, which makes the trap restoring for a
positive axial gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atomkit import InvalidInputError

AXES = np.eye(3)


@dataclass(frozen=True)
class Beam:
    direction: tuple[float, float, float]
    detuning: float  # rad/s, signed
    saturation: float  # per-beam s
    helicity: int

    @property
    def axis(self) -> int:
        return int(np.argmax(np.abs(self.direction)))


@dataclass(frozen=True)
class BeamSet:
    beams: tuple[Beam, ...]

    def __post_init__(self):
        validate_beams(self)

    @property
    def directions(self) -> np.ndarray:
        return np.array([b.direction for b in self.beams], dtype=float)

    @property
    def detunings(self) -> np.ndarray:
        return np.array([b.detuning for b in self.beams], dtype=float)

    @property
    def saturations(self) -> np.ndarray:
        return np.array([b.saturation for b in self.beams], dtype=float)

    @property
    def helicities(self) -> np.ndarray:
        return np.array([b.helicity for b in self.beams], dtype=float)

    @property
    def s_total(self) -> float:
        return float(self.saturations.sum())

    def zeeman_axes(self) -> np.ndarray:
        """(n_beams, 3) lab axis of each beam, weighted by its polarization label."""
        d = self.directions
        return self.helicities[:, None] * np.abs(d)

    def axis_sign(self) -> np.ndarray:
        """Polarization label of the beam travelling along +x, +y, +z."""
        out = np.ones(3)
        for b in self.beams:
            ax = b.axis
            if b.direction[ax] > 0:
                out[ax] = b.helicity
        return out


def validate_beams(bs: BeamSet, tol: float = 1e-12) -> None:
    if len(bs.beams) == 0:
        raise InvalidInputError("a BeamSet needs at least one beam")
    d = np.array([b.direction for b in bs.beams], dtype=float)
    norms = np.linalg.norm(d, axis=1)
    if np.any(np.abs(norms - 1) > tol):
        raise InvalidInputError("beam directions must be unit vectors")
    for b in bs.beams:
        if b.saturation < 0:
            raise InvalidInputError("saturation must be non-negative")
        if b.helicity not in (-1, 1):
            raise InvalidInputError("helicity must be +1 or -1")


def is_standard_mot(bs: BeamSet, tol: float = 1e-12) -> bool:
    """Three counter-propagating pairs on orthogonal axes with opposite labels."""
    if len(bs.beams) != 6:
        return False
    found = {}
    for b in bs.beams:
        d = np.asarray(b.direction)
        ax = b.axis
        if abs(abs(d[ax]) - 1) > tol or np.sum(np.abs(d)) - 1 > tol:
            return False
        found[(ax, int(np.sign(d[ax])))] = b.helicity
    if len(found) != 6:
        return False
    return all(found[(ax, 1)] == -found[(ax, -1)] for ax in range(3))


def standard_mot_beams(detuning: float, s_per_beam: float, axial: int = 2) -> BeamSet:
    """Six beams along +-x, +-y, +-z sharing detuning and per-beam saturation."""
    if s_per_beam < 0:
        raise InvalidInputError("s_per_beam must be non-negative")
    beams = []
    for ax in range(3):
        label = 1 if ax == axial else -1
        for sign in (1, -1):
            direction = tuple(float(sign) * AXES[ax])
            beams.append(Beam(direction, float(detuning), float(s_per_beam), label * sign))
    return BeamSet(tuple(beams))


def one_axis_pair(detuning: float, s_per_beam: float, axis: int = 2) -> BeamSet:
    """A single counter-propagating sigma+/sigma- pair along `axis`."""
    return BeamSet(tuple(
        Beam(tuple(float(sign) * AXES[axis]), float(detuning), float(s_per_beam), sign)
        for sign in (1, -1)
    ))


@dataclass(frozen=True)
class FieldConfig:
    """Quadrupole with axial gradient `gradient` (T/m) along z plus a uniform bias (T)."""

    gradient: float = 0.0
    bias: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def bias_vector(self) -> np.ndarray:
        return np.asarray(self.bias, dtype=float)


def field_at(position, cfg: FieldConfig) -> np.ndarray:
    """B(r) in T for one position (3,) or many (N, 3)."""
    r = np.asarray(position, dtype=float)
    b = cfg.gradient
    B = r * np.array([-b / 2, -b / 2, b])
    return B + cfg.bias_vector


def divergence(cfg: FieldConfig, position, h: float = 1e-6) -> float:
    """Central finite-difference div B at a point."""
    r = np.asarray(position, dtype=float)
    total = 0.0
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        total += (field_at(r + e, cfg)[ax] - field_at(r - e, cfg)[ax]) / (2 * h)
    return total
