import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from motsim.atomkit import InvalidInputError, doppler_limit, get_preset, locking_velocities
from motsim.constants import GAUSS, HBAR, KB, MU_B
from motsim.fieldgeom import FieldConfig, one_axis_pair, standard_mot_beams
from motsim.forces import (ForceModelParams, beam_scatter_rates, doppler_force,
                           doppler_locking_velocity, stability_limit, subdoppler_force,
                           subdoppler_friction, subdoppler_locking_velocity,
                           subdoppler_temperature, total_force)

TM = get_preset("Tm-410.6")
GAMMA = TM.linewidth
MOT = standard_mot_beams(-GAMMA, 0.4 / 6)
PARAMS = ForceModelParams()


def zforce(vz, B=0.0, beams=MOT, tr=TM):
    v = np.array([0.0, 0.0, vz])
    return float(doppler_force(v, np.array([0.0, 0.0, B]), beams, tr).force[2])


@given(st.floats(-5.0, 5.0))
def test_doppler_force_odd_at_zero_field(vz):
    assert zforce(-vz) == pytest.approx(-zforce(vz), rel=1e-9, abs=1e-35)


@given(st.floats(1e-4, 5.0))
def test_red_detuning_damps(vz):
    assert zforce(vz) < 0


def test_blue_detuning_heats():
    blue = standard_mot_beams(+GAMMA, 0.4 / 6)
    assert zforce(0.1, beams=blue) > 0


def test_scatter_rate_low_intensity_limit():
    pair = one_axis_pair(0.0, 1e-6)
    rates = beam_scatter_rates(np.zeros(3), np.zeros(3), pair, TM)
    np.testing.assert_allclose(rates, 0.5 * GAMMA * 1e-6, rtol=1e-5)


def test_doppler_diffusion_over_friction_gives_limit():
    # low saturation, delta = gamma/2: D/alpha must reproduce hbar gamma / 2
    beams = standard_mot_beams(-GAMMA / 2, 1e-5)
    h = 1e-5
    alpha = -(zforce(h, beams=beams) - zforce(-h, beams=beams)) / (2 * h)
    D = doppler_force(np.zeros(3), np.zeros(3), beams, TM).diffusion[2]
    assert D / alpha / KB == pytest.approx(doppler_limit(TM), rel=1e-3)


def test_doppler_root_matches_locking_velocity():
    B = 1 * GAUSS
    root = brentq(lambda v: zforce(v, B), -3.0, 3.0, xtol=1e-12)
    expected = doppler_locking_velocity(np.array([0, 0, B]), MOT, TM)[2]
    assert abs(expected) == pytest.approx(abs(locking_velocities(B, TM)[0]), rel=1e-12)
    assert root == pytest.approx(expected, rel=0.02)


def test_subdoppler_zero_exact():
    B = np.array([0.3, -0.7, 1.0]) * GAUSS
    v0 = subdoppler_locking_velocity(B, MOT, TM)
    f = subdoppler_force(v0, B, MOT, TM, PARAMS).force
    assert np.all(f == 0.0)


@given(st.floats(0.0, 10.0))
def test_locking_separation_linear(bg):
    B = np.array([0.0, 0.0, bg * GAUSS])
    sep = subdoppler_locking_velocity(B, MOT, TM)[2] - doppler_locking_velocity(B, MOT, TM)[2]
    slope = abs(TM.g_upper - TM.g_lower) * MU_B / (HBAR * TM.k)
    assert abs(sep) == pytest.approx(slope * bg * GAUSS, rel=1e-9, abs=1e-18)


@given(st.floats(-1.0, 1.0))
def test_subdoppler_force_odd_about_locking_velocity(u):
    B = np.array([0.0, 0.0, 0.5 * GAUSS])
    v0 = subdoppler_locking_velocity(B, MOT, TM)
    du = np.array([0.0, 0.0, u])
    f_plus = subdoppler_force(v0 + du, B, MOT, TM, PARAMS).force[2]
    f_minus = subdoppler_force(v0 - du, B, MOT, TM, PARAMS).force[2]
    assert f_plus == pytest.approx(-f_minus, rel=1e-9, abs=1e-35)
    assert f_plus * u <= 0


def test_subdoppler_slope_and_temperature():
    alpha = subdoppler_friction(MOT, TM, PARAMS)
    assert alpha == pytest.approx(0.2 * HBAR * TM.k**2)
    h = 1e-6
    f = subdoppler_force(np.array([[0, 0, h], [0, 0, -h]]), np.zeros(3), MOT, TM, PARAMS).force[:, 2]
    assert -(f[0] - f[1]) / (2 * h) == pytest.approx(alpha, rel=1e-6)
    t = subdoppler_temperature(MOT, TM, PARAMS)
    oracle = HBAR * GAMMA**2 * 0.4 / (8 * 4 * GAMMA * KB) + 2e-6
    assert t == pytest.approx(oracle, rel=1e-12)
    D = subdoppler_force(np.zeros(3), np.zeros(3), MOT, TM, PARAMS).diffusion
    np.testing.assert_allclose(D / alpha / KB, t, rtol=1e-12)


def test_subdoppler_vanishes_without_light():
    dark = standard_mot_beams(-GAMMA, 0.0)
    assert subdoppler_friction(dark, TM, PARAMS) == 0.0


def test_subdoppler_temperature_rejects_resonance():
    with pytest.raises(InvalidInputError):
        subdoppler_temperature(standard_mot_beams(0.0, 0.1), TM, PARAMS)


def test_params_validation():
    with pytest.raises(InvalidInputError):
        ForceModelParams(subdoppler_capture=0.0)
    with pytest.raises(InvalidInputError):
        ForceModelParams(subdoppler_strength=-1.0)


def test_channels_add():
    v = np.array([[0.01, -0.02, 0.03]])
    x = np.array([[1e-4, 0.0, -1e-4]])
    fc = FieldConfig(0.2)
    both = total_force(v, x, MOT, fc, TM, PARAMS)
    dop = total_force(v, x, MOT, fc, TM, ForceModelParams(subdoppler=False))
    sub = total_force(v, x, MOT, fc, TM, ForceModelParams(doppler=False))
    np.testing.assert_allclose(both.force, dop.force + sub.force, rtol=1e-12)
    np.testing.assert_allclose(both.diffusion, dop.diffusion + sub.diffusion, rtol=1e-12)


def test_mot_restoring_force():
    fc = FieldConfig(0.2)
    params = ForceModelParams(subdoppler=False)
    for ax in range(3):
        x = np.zeros((1, 3))
        x[0, ax] = 1e-3
        f = total_force(np.zeros((1, 3)), x, MOT, fc, TM, params).force[0, ax]
        assert f < 0


def test_default_step_is_stable():
    assert stability_limit(MOT, TM, PARAMS) > 1e-6


def test_subdoppler_negligible_at_doppler_velocity_for_large_separation():
    tr = TM.with_mismatch(0.3)
    B = np.array([0.0, 0.0, 50 * GAUSS])
    v_d = doppler_locking_velocity(B, MOT, tr)
    gap = abs(v_d[2] - subdoppler_locking_velocity(B, MOT, tr)[2])
    assert gap > 40 * PARAMS.subdoppler_capture
    f = abs(subdoppler_force(v_d, B, MOT, tr, PARAMS).force[2])
    peak = subdoppler_friction(MOT, tr, PARAMS) * PARAMS.subdoppler_capture / 2
    assert f < 0.05 * peak


@given(st.floats(0.01, 5.0), st.floats(0.2, 5.0))
def test_model_temperature_scaling(s, x):
    no_offset = ForceModelParams(heating_offset=0.0)
    t = subdoppler_temperature(standard_mot_beams(-x * GAMMA, s / 6), TM, no_offset)
    assert subdoppler_temperature(standard_mot_beams(-x * GAMMA, 2 * s / 6), TM, no_offset) == pytest.approx(2 * t)
    assert subdoppler_temperature(standard_mot_beams(-2 * x * GAMMA, s / 6), TM, no_offset) == pytest.approx(t / 2)


def test_all_channels_off_is_inert():
    off = ForceModelParams(doppler=False, subdoppler=False)
    out = total_force(np.ones((3, 3)), np.ones((3, 3)) * 1e-3, MOT, FieldConfig(0.2), TM, off)
    assert not out.force.any() and not out.diffusion.any()
