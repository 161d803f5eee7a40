"""Run configuration: dataclasses plus an INI file format.

Every key carries its unit in the name.  Example (all keys optional)::

    [transition]
    preset = Tm-410.6
    # preset_file = my_presets.ini
    # g_lower = 1.141
    # mismatch = 0.02        ; overrides g_upper = g_lower * (1 - mismatch)

    [beams]
    detuning_mhz = -10.0     ; laser minus atom frequency, red is negative
    saturation_total = 0.4   ; total S at trap center, split evenly over 6 beams

    [field]
    gradient_g_cm = 20.0
    bias_g = 0, 0, 0

    [forces]
    doppler = true
    subdoppler = true
    subdoppler_strength = 0.2     ; friction in units of hbar k^2
    subdoppler_capture_m_s = 0.07
    subdoppler_temperature_constant = 1.0
    heating_offset_uk = 2.0

    [simulation]
    n_atoms = 4096
    dt_us = 1.0
    max_time_ms = 30.0
    window_ms = auto
    t_init_uk = 300.0
    r_init_um = 80.0
    gravity = true
    start_at_doppler_velocity = false
    seed = 0

    [camera]
    width = 512
    height = 512
    pitch_um = 10.0
    angle_deg = 45.0
    efficiency = 0.01
    exposure_us = 200.0
    probe_intensity_mw_cm2 = 100.0
    shot_noise = true
    tof_grid_ms = 0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 7, 8
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .atomkit import CoolingTransition, InvalidInputError, get_preset
from .constants import GAUSS, GAUSS_PER_CM, MHZ, MW_PER_CM2
from .dynamics import ForceContext
from .fieldgeom import BeamSet, FieldConfig, standard_mot_beams
from .forces import ForceModelParams
from .thermometry import DEFAULT_TOF_GRID_MS, CameraGeometry


@dataclass(frozen=True)
class TransitionSection:
    preset: str = "Tm-410.6"
    preset_file: str | None = None
    g_lower: float | None = None
    g_upper: float | None = None
    mismatch: float | None = None
    linewidth_mhz: float | None = None


@dataclass(frozen=True)
class BeamSection:
    detuning_mhz: float = -10.0
    saturation_total: float = 0.4


@dataclass(frozen=True)
class FieldSection:
    gradient_g_cm: float = 20.0
    bias_g: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ForceSection:
    doppler: bool = True
    subdoppler: bool = True
    subdoppler_strength: float = 0.2
    subdoppler_capture_m_s: float = 0.07
    subdoppler_temperature_constant: float = 1.0
    heating_offset_uk: float = 2.0


@dataclass(frozen=True)
class SimulationSection:
    n_atoms: int = 4096
    dt_us: float = 1.0
    max_time_ms: float = 30.0
    window_ms: float | None = None
    t_init_uk: float = 300.0
    r_init_um: float = 80.0
    gravity: bool = True
    start_at_doppler_velocity: bool = False
    seed: int = 0


@dataclass(frozen=True)
class CameraSection:
    width: int = 512
    height: int = 512
    pitch_um: float = 10.0
    angle_deg: float = 45.0
    efficiency: float = 0.01
    exposure_us: float = 200.0
    probe_intensity_mw_cm2: float = 100.0
    shot_noise: bool = True
    tof_grid_ms: tuple[float, ...] = DEFAULT_TOF_GRID_MS


SECTIONS = {
    "transition": TransitionSection,
    "beams": BeamSection,
    "field": FieldSection,
    "forces": ForceSection,
    "simulation": SimulationSection,
    "camera": CameraSection,
}


@dataclass(frozen=True)
class RunConfig:
    transition: TransitionSection = dataclasses.field(default_factory=TransitionSection)
    beams: BeamSection = dataclasses.field(default_factory=BeamSection)
    field: FieldSection = dataclasses.field(default_factory=FieldSection)
    forces: ForceSection = dataclasses.field(default_factory=ForceSection)
    simulation: SimulationSection = dataclasses.field(default_factory=SimulationSection)
    camera: CameraSection = dataclasses.field(default_factory=CameraSection)

    def update(self, section: str, **changes) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **changes)})

    # --- physics objects ---------------------------------------------------

    def build_transition(self) -> CoolingTransition:
        t = self.transition
        tr = get_preset(t.preset, t.preset_file)
        if t.linewidth_mhz is not None:
            tr = replace(tr, linewidth=2 * math.pi * t.linewidth_mhz * MHZ)
        if t.g_lower is not None:
            tr = replace(tr, g_lower=t.g_lower)
        if t.g_upper is not None:
            tr = replace(tr, g_upper=t.g_upper)
        if t.mismatch is not None:
            tr = tr.with_mismatch(t.mismatch)
        return tr

    def build_beams(self) -> BeamSet:
        b = self.beams
        return standard_mot_beams(2 * math.pi * b.detuning_mhz * MHZ, b.saturation_total / 6)

    def build_field(self) -> FieldConfig:
        f = self.field
        return FieldConfig(f.gradient_g_cm * GAUSS_PER_CM, tuple(c * GAUSS for c in f.bias_g))

    def build_params(self) -> ForceModelParams:
        f = self.forces
        return ForceModelParams(
            subdoppler_strength=f.subdoppler_strength,
            subdoppler_capture=f.subdoppler_capture_m_s,
            subdoppler_temperature_constant=f.subdoppler_temperature_constant,
            heating_offset=f.heating_offset_uk * 1e-6,
            doppler=f.doppler,
            subdoppler=f.subdoppler,
        )

    def build_context(self) -> ForceContext:
        return ForceContext(self.build_beams(), self.build_field(), self.build_transition(),
                            self.build_params(), gravity=self.simulation.gravity)

    def build_camera(self) -> CameraGeometry:
        c = self.camera
        return CameraGeometry(c.width, c.height, c.pitch_um * 1e-6, c.angle_deg,
                              efficiency=c.efficiency)

    @property
    def probe_intensity(self) -> float:
        return self.camera.probe_intensity_mw_cm2 * MW_PER_CM2

    # --- serialization -----------------------------------------------------

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for name in SECTIONS:
            sec = getattr(self, name)
            parser[name] = {}
            for f in fields(sec):
                value = getattr(sec, f.name)
                if value is None:
                    continue
                parser[name][f.name] = _format(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.read_string(text)
        unknown = set(parser.sections()) - set(SECTIONS)
        if unknown:
            raise InvalidInputError(f"unknown config sections: {', '.join(sorted(unknown))}")
        kwargs = {}
        for name, section_cls in SECTIONS.items():
            if not parser.has_section(name):
                continue
            kwargs[name] = _parse_section(section_cls, parser[name], name)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_ini(Path(path).read_text())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_section(section_cls, section, name):
    known = {f.name: f for f in fields(section_cls)}
    kwargs = {}
    for key, raw in section.items():
        if key not in known:
            raise InvalidInputError(f"unknown key {key!r} in [{name}]")
        default = known[key].default
        kwargs[key] = _parse_value(raw, default, key)
    return section_cls(**kwargs)


def _parse_value(raw: str, default, key: str):
    raw = raw.strip()
    if raw.lower() in ("auto", "none", ""):
        return None
    if isinstance(default, bool):
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise InvalidInputError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        return tuple(float(v) for v in raw.split(","))
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or default is None:
        try:
            return float(raw)
        except ValueError:
            return raw
    return raw
