"""Synthetic time-of-flight thermometry.

The chain mirrors an absorption/fluorescence TOF measurement: release the
cloud, let it expand ballistically, image it along an oblique horizontal
axis, fit a 2D Gaussian to every frame and fit the radius growth
r(t)^2 = r(0)^2 + (2 k_B T / m) t^2.

Image layout: ``counts[row, col]``; columns run along the horizontal image
axis, rows along +z (row 0 is the lowest height).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .atomkit import AtomSpecies, CoolingTransition, InvalidInputError
from .constants import KB, MW_PER_CM2
from .dynamics import EnsembleState, ballistic_expand
from .rng import STREAM_IMAGE, derive_seed

# Time grid of the reference expansion series, ms.
DEFAULT_TOF_GRID_MS = (0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 7, 8)


class FitError(RuntimeError):
    """Raised when an image or series cannot be fitted at all."""


@dataclass(frozen=True)
class CameraGeometry:
    width: int = 512
    height: int = 512
    pitch: float = 10e-6  # m per pixel in the object plane (1:1 imaging)
    angle_deg: float = 45.0  # observation axis azimuth from the x beams, horizontal plane
    center: tuple[float, float] = (0.0, 0.0)  # image-plane coordinates of the frame center, m
    efficiency: float = 0.01  # detected counts per scattered photon

    @property
    def direction(self) -> np.ndarray:
        a = math.radians(self.angle_deg)
        return np.array([math.cos(a), math.sin(a), 0.0])

    @property
    def axes(self) -> np.ndarray:
        """Unit vectors of the image columns and rows in lab coordinates."""
        a = math.radians(self.angle_deg)
        return np.array([[-math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]])

    @property
    def origin(self) -> tuple[float, float]:
        return (self.center[0] - 0.5 * self.width * self.pitch,
                self.center[1] - 0.5 * self.height * self.pitch)


@dataclass
class CloudImage:
    counts: np.ndarray
    pitch: float
    direction: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)
    exposure: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if np.any(self.counts < 0):
            raise InvalidInputError("image counts must be non-negative")
        if not self.pitch > 0:
            raise InvalidInputError("pixel pitch must be positive")

    def pixel_centers(self):
        h, w = self.counts.shape
        xs = self.origin[0] + (np.arange(w) + 0.5) * self.pitch
        ys = self.origin[1] + (np.arange(h) + 0.5) * self.pitch
        return xs, ys


@dataclass
class GaussianFit:
    center: np.ndarray
    radius_1e: np.ndarray
    amplitude: float
    background: float
    residual_norm: float
    converged: bool = True

    @property
    def radius(self) -> float:
        return float(np.mean(self.radius_1e))


def probe_scatter_rate(transition: CoolingTransition, intensity: float = 100 * MW_PER_CM2) -> float:
    """Resonant scattering rate of a probe of the given intensity (W/m^2)."""
    s = intensity / transition.isat
    return 0.5 * transition.linewidth * s / (1 + s)


def project(positions, camera: CameraGeometry) -> np.ndarray:
    """(N, 2) image-plane coordinates of lab positions."""
    return np.asarray(positions, dtype=float) @ camera.axes.T


def render_image(state: EnsembleState, camera: CameraGeometry, exposure: float,
                 scatter_rate: float, shot_noise: bool = False, seed: int = 0,
                 blur_steps: int = 1) -> CloudImage:
    """Bin projected atoms into pixels, each carrying exposure*rate*efficiency counts.

    With ``blur_steps > 1`` the exposure is split into sub-intervals and atoms are
    advanced along their velocities, which smears the image by the motion during
    the probe pulse.
    """
    if not exposure > 0:
        raise InvalidInputError("exposure must be positive")
    per_atom = exposure * scatter_rate * camera.efficiency
    x0, y0 = camera.origin
    edges_x = x0 + np.arange(camera.width + 1) * camera.pitch
    edges_y = y0 + np.arange(camera.height + 1) * camera.pitch
    counts = np.zeros((camera.height, camera.width))
    if len(state.positions):
        for j in range(blur_steps):
            tau = exposure * (j + 0.5) / blur_steps if blur_steps > 1 else 0.0
            uv = project(state.positions + state.velocities * tau, camera)
            hist, _, _ = np.histogram2d(uv[:, 1], uv[:, 0], bins=(edges_y, edges_x))
            counts += hist * (per_atom / blur_steps)
    if shot_noise:
        rng = np.random.default_rng(derive_seed(seed, STREAM_IMAGE))
        counts = rng.poisson(counts).astype(float)
    return CloudImage(counts, camera.pitch, camera.direction, (x0, y0), exposure)


def _profile(xs, c, r, pitch):
    if pitch is None:
        return np.exp(-((xs - c) / r) ** 2)
    # pixel average of exp(-(x-c)^2/r^2); removes the binning bias for clouds of a few pixels
    h = 0.5 * pitch
    return (math.sqrt(math.pi) * r / pitch * 0.5) * (erf((xs + h - c) / r) - erf((xs - h - c) / r))


def gaussian_model(params, xs, ys, pitch=None):
    """A exp(-(x-cx)^2/rx^2 - (y-cy)^2/ry^2) + bg, point-sampled or averaged over pixels of `pitch`."""
    amp, cx, cy, rx, ry, bg = params
    return amp * np.outer(_profile(ys, cy, ry, pitch), _profile(xs, cx, rx, pitch)) + bg


def _moments(counts, xs, ys):
    w = np.clip(counts - np.median(counts), 0, None)
    total = w.sum()
    if total <= 0:
        w = counts
        total = counts.sum()
    px = w.sum(axis=0) / total
    py = w.sum(axis=1) / total
    cx = float(px @ xs)
    cy = float(py @ ys)
    sx = math.sqrt(max(float(px @ (xs - cx) ** 2), 0.0))
    sy = math.sqrt(max(float(py @ (ys - cy) ** 2), 0.0))
    return cx, cy, sx, sy


def fit_gaussian(image: CloudImage, roi_radii: float = 5.0, max_nfev: int = 200) -> GaussianFit:
    """Least-squares fit of A exp(-(x-x0)^2/rx^2 - (y-y0)^2/ry^2) + background, integrated over pixels."""
    counts = image.counts
    nonzero = np.argwhere(counts > 0)
    if len(nonzero) == 0:
        raise FitError("image has no counts")
    if len(np.unique(nonzero[:, 0])) < 2 or len(np.unique(nonzero[:, 1])) < 2:
        raise FitError("image signal spans a single row or column; radius is undefined")
    xs, ys = image.pixel_centers()
    cx, cy, sx, sy = _moments(counts, xs, ys)
    p = image.pitch
    rx0 = max(math.sqrt(2) * sx, p)
    ry0 = max(math.sqrt(2) * sy, p)
    # crop to a window around the moment estimate
    jx = (xs > cx - roi_radii * rx0) & (xs < cx + roi_radii * rx0)
    jy = (ys > cy - roi_radii * ry0) & (ys < cy + roi_radii * ry0)
    sub = counts[np.ix_(jy, jx)]
    xs_c, ys_c = xs[jx], ys[jy]
    bg0 = float(np.median(counts)) if sub.size < counts.size else 0.0
    amp0 = max(float(sub.max()) - bg0, 1e-12)
    x_scale = p

    def residuals(q):
        amp, qx, qy, lrx, lry, bg = q
        prm = (amp, qx * x_scale, qy * x_scale, math.exp(lrx), math.exp(lry), bg)
        return (gaussian_model(prm, xs_c, ys_c, p) - sub).ravel()

    q0 = np.array([amp0, cx / x_scale, cy / x_scale, math.log(rx0), math.log(ry0), bg0])
    res = least_squares(residuals, q0, method="trf", x_scale="jac", max_nfev=max_nfev)
    amp, qx, qy, lrx, lry, bg = res.x
    return GaussianFit(
        center=np.array([qx * x_scale, qy * x_scale]),
        radius_1e=np.array([math.exp(lrx), math.exp(lry)]),
        amplitude=float(amp),
        background=float(bg),
        residual_norm=float(np.linalg.norm(res.fun)),
        converged=bool(res.success),
    )


@dataclass
class TofSeries:
    times: np.ndarray  # s
    radii: np.ndarray  # m, 1/e radius

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.times.shape != self.radii.shape:
            raise InvalidInputError("times and radii must have equal length")


@dataclass
class TemperatureFit:
    temperature: float
    r0: float
    temperature_err: float
    r0_err: float
    residual_norm: float
    slope: float
    intercept: float
    quality: str = "ok"


def ols_line(x, y):
    """Least-squares straight line y = a + b x; returns (a, b, se_a, se_b, residuals)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    a, b = coef
    resid = y - A @ coef
    dof = len(x) - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        se_a, se_b = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    else:
        se_a = se_b = 0.0
    return float(a), float(b), se_a, se_b, resid


def fit_temperature(series: TofSeries, species: AtomSpecies) -> TemperatureFit:
    """Fit r^2 = r0^2 + (2 k_B T / m) t^2 by ordinary least squares in (t^2, r^2)."""
    t = series.times
    if len(np.unique(t)) < 3:
        raise FitError("temperature fit needs at least three distinct expansion times")
    a, b, se_a, se_b, resid = ols_line(t**2, series.radii**2)
    scale = species.mass / (2 * KB)
    quality = "ok"
    # rounding noise on a flat series must not be reported as contraction
    tiny = 1e-12 * abs(a) / max(float(np.max(t**2)), 1e-300)
    if b < -tiny:
        quality = "not-expanding"
    if a <= 0:
        quality = "nonpositive-r0" if quality == "ok" else quality
    r0 = math.sqrt(a) if a > 0 else 0.0
    return TemperatureFit(
        temperature=max(b, 0.0) * scale,
        r0=r0,
        temperature_err=se_b * scale,
        r0_err=se_a / (2 * r0) if r0 > 0 else math.inf,
        residual_norm=float(np.linalg.norm(resid)),
        slope=b,
        intercept=a,
        quality=quality,
    )


@dataclass
class TofMeasurement:
    fit: TemperatureFit
    axis_fits: list
    series: TofSeries
    frames: list  # GaussianFit per frame


def measure_tof(state: EnsembleState, species: AtomSpecies, times, camera: CameraGeometry,
                scatter_rate: float, exposure: float = 200e-6, shot_noise: bool = False,
                seed: int = 0, gravity: bool = True, blur_steps: int = 1) -> TofMeasurement:
    """Expand, image and fit every frame, then fit the temperature."""
    frames = []
    for i, dt in enumerate(times):
        expanded = ballistic_expand(state, float(dt), gravity=gravity)
        img = render_image(expanded, camera, exposure, scatter_rate, shot_noise,
                           seed=derive_seed(seed, i), blur_steps=blur_steps)
        frames.append(fit_gaussian(img))
    times = np.asarray(times, dtype=float)
    per_axis = np.array([f.radius_1e for f in frames])
    series = TofSeries(times, per_axis.mean(axis=1))
    axis_fits = [fit_temperature(TofSeries(times, per_axis[:, j]), species) for j in range(2)]
    return TofMeasurement(fit_temperature(series, species), axis_fits, series, frames)


# --- file formats ----------------------------------------------------------

def write_series_csv(path, series: TofSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt_ms", "radius_um"])
        for t, r in zip(series.times, series.radii):
            w.writerow([repr(float(t) * 1e3), repr(float(r) * 1e6)])


def read_series_csv(path) -> TofSeries:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "dt_ms" not in rows[0] or "radius_um" not in rows[0]:
        raise InvalidInputError(f"{path}: expected header dt_ms,radius_um")
    t = np.array([float(r["dt_ms"]) for r in rows]) * 1e-3
    r = np.array([float(r["radius_um"]) for r in rows]) * 1e-6
    return TofSeries(t, r)


def write_fit(path, fit: TemperatureFit, axis_fits=()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "temperature_uK", "temperature_err_uK", "r0_um", "r0_err_um",
                    "residual_norm_um2", "quality"])
        for name, f in [("mean", fit), *zip(("horizontal", "vertical"), axis_fits)]:
            w.writerow([name, f"{f.temperature * 1e6:.6g}", f"{f.temperature_err * 1e6:.6g}",
                        f"{f.r0 * 1e6:.6g}", f"{f.r0_err * 1e6:.6g}",
                        f"{f.residual_norm * 1e12:.6g}", f.quality])


def write_pgm(path, image: CloudImage, binary: bool = True, extra: dict | None = None) -> Path:
    """Write a 16-bit PGM plus a JSON sidecar holding pitch, geometry and scaling."""
    path = Path(path)
    counts = image.counts
    peak = float(counts.max()) if counts.size else 0.0
    scale = max(1.0, peak / 65535.0)
    data = np.rint(counts / scale).astype(np.uint16)
    h, w = data.shape
    # PGM rows run top to bottom, so the highest row goes first
    rows = data[::-1]
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode())
            fh.write(rows.astype(">u2").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n65535\n")
            for row in rows:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    meta = {
        "pitch_m": image.pitch,
        "observation_direction": [float(c) for c in image.direction],
        "origin_m": [float(c) for c in image.origin],
        "exposure_s": image.exposure,
        "count_scale": scale,
    }
    meta.update(image.metadata)
    if extra:
        meta.update(extra)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return path


def _pgm_tokens(buf: bytes, n: int):
    tokens, pos = [], 0
    while len(tokens) < n:
        while buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while buf[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not buf[pos:pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> CloudImage:
    path = Path(path)
    buf = path.read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(buf, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == b"P5":
        dtype = ">u2" if maxval > 255 else "u1"
        data = np.frombuffer(buf, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    elif magic == b"P2":
        data = np.array(buf[pos:].split()[: w * h], dtype=float).reshape(h, w)
    else:
        raise InvalidInputError(f"{path}: not a P2/P5 graymap")
    meta_path = path.with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    counts = data[::-1].astype(float) * meta.get("count_scale", 1.0)
    return CloudImage(
        counts,
        meta.get("pitch_m", 10e-6),
        np.asarray(meta.get("observation_direction", [1.0, 0.0, 0.0])),
        tuple(meta.get("origin_m", (0.0, 0.0))),
        meta.get("exposure_s", 0.0),
        {k: v for k, v in meta.items() if k not in
         ("pitch_m", "observation_direction", "origin_m", "exposure_s", "count_scale")},
    )


def series_from_images(directory) -> tuple[TofSeries, list]:
    """Fit every *.pgm in a directory; expansion times come from the `dt_s` sidecar key."""
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise FitError(f"no .pgm images in {directory}")
    times, fits = [], []
    for p in paths:
        img = read_pgm(p)
        if "dt_s" not in img.metadata:
            raise InvalidInputError(f"{p}: sidecar lacks dt_s")
        times.append(float(img.metadata["dt_s"]))
        fits.append(fit_gaussian(img))
    order = np.argsort(times)
    times = np.asarray(times)[order]
    fits = [fits[i] for i in order]
    radii = np.array([f.radius for f in fits])
    return TofSeries(times, radii), fits
