import math

import numpy as np
import pytest

from motsim.atomkit import AtomSpecies, InvalidInputError, get_preset
from motsim.config import RunConfig
from motsim.constants import G_EARTH, KB
from motsim.dynamics import (ConfigurationError, EnsembleState, LinearLangevin, ballistic_expand,
                             cloud_stats, evolve_to_equilibrium, init_ensemble, read_snapshot, run,
                             step, write_history, write_snapshot)

TM = get_preset("Tm-410.6")
M = TM.mass


def moving_state(n=1000, seed=3):
    return init_ensemble(n, 100e-6, 80e-6, TM.species, seed)


def test_free_flight_exact():
    s0 = moving_state()
    ctx = LinearLangevin(M, 0.0, 0.0)
    s1 = run(s0, ctx, 1e-3, 1e-6)
    np.testing.assert_array_equal(s1.velocities, s0.velocities)
    np.testing.assert_allclose(s1.positions, s0.positions + s0.velocities * s1.time, rtol=1e-9, atol=1e-15)


def test_velocity_diffusion_variance():
    D = 1e-48
    ctx = LinearLangevin(M, 0.0, D)
    s0 = EnsembleState(np.zeros((10_000, 3)), np.zeros((10_000, 3)), rng_seed=11)
    s1 = run(s0, ctx, 200e-6, 1e-6)
    expected = 2 * D * s1.time / M**2
    np.testing.assert_allclose(s1.velocities.var(axis=0), expected, rtol=0.05)


def test_drag_decay():
    alpha = M / 2e-3
    ctx = LinearLangevin(M, alpha, 0.0)
    s0 = EnsembleState(np.zeros((4, 3)), np.ones((4, 3)))
    s1 = run(s0, ctx, 1e-3, 1e-6)
    assert s1.velocities[0, 0] == pytest.approx(math.exp(-alpha * s1.time / M), rel=0.01)


def test_fluctuation_dissipation():
    tau = 50e-6
    alpha = M / tau
    T = 100e-6
    ctx = LinearLangevin(M, alpha, alpha * KB * T)
    s = EnsembleState(np.zeros((10_000, 3)), np.zeros((10_000, 3)), rng_seed=5)
    s = run(s, ctx, 10 * tau, 1e-6)
    t_axes = cloud_stats(s, TM.species).temperature_axes
    np.testing.assert_allclose(t_axes, T, rtol=0.05)


def test_worker_count_does_not_change_result():
    ctx = RunConfig().build_context()
    s0 = moving_state(257)
    a = run(s0, ctx, 20e-6, 1e-6, workers=1)
    b = run(s0, ctx, 20e-6, 1e-6, workers=4)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.velocities, b.velocities)


def test_step_rejects_unstable_dt():
    ctx = RunConfig().build_context()
    with pytest.raises(ConfigurationError):
        step(moving_state(10), 1e-3, ctx)
    with pytest.raises(ConfigurationError):
        step(moving_state(10), 0.0, ctx)


def test_init_ensemble_statistics():
    s = init_ensemble(50_000, 25e-6, 80e-6, TM.species, 1, drift=(0.0, 0.0, 0.1))
    st = cloud_stats(s, TM.species)
    np.testing.assert_allclose(st.temperature_axes, 25e-6, rtol=0.03)
    np.testing.assert_allclose(st.radius_1e, 80e-6, rtol=0.03)
    assert s.velocities[:, 2].mean() == pytest.approx(0.1, abs=1e-3)
    with pytest.raises(InvalidInputError):
        init_ensemble(0, 1e-6, 1e-6, TM.species, 0)


def test_ballistic_expansion_exact():
    s = moving_state(5)
    out = ballistic_expand(s, 8e-3, gravity=True)
    expected = s.positions + s.velocities * 8e-3
    expected[:, 2] -= 0.5 * G_EARTH * 64e-6
    np.testing.assert_allclose(out.positions, expected, rtol=1e-12)
    with pytest.raises(InvalidInputError):
        ballistic_expand(s, -1.0)


def test_cloud_stats_needs_two_atoms():
    with pytest.raises(InvalidInputError):
        cloud_stats(EnsembleState(np.zeros((1, 3)), np.zeros((1, 3))), TM.species)


def test_short_equilibration_runs():
    cfg = RunConfig().update("simulation", n_atoms=256)
    ctx = cfg.build_context()
    s0 = init_ensemble(256, 300e-6, 80e-6, TM.species, 0)
    res = evolve_to_equilibrium(s0, ctx, 2e-3, window=0.5e-3)
    assert res.history and len(res.stats.temperature_axes) == 3
    assert np.all(np.asarray(res.stats.temperature_axes) > 0)


def test_snapshot_roundtrip(tmp_path):
    s = moving_state(20)
    write_snapshot(tmp_path / "s.csv", s)
    back = read_snapshot(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.positions, s.positions)
    np.testing.assert_array_equal(back.velocities, s.velocities)
    write_history(tmp_path / "h.csv", [(1e-3, 1e-4, 8e-5)])
    assert (tmp_path / "h.csv").read_text().splitlines()[1] == "1,100,80"


def test_energy_monotone_under_friction_and_linear_under_diffusion():
    s = moving_state(2000)
    drag = LinearLangevin(M, M / 1e-4, 0.0)
    energies = []
    for _ in range(10):
        s = run(s, drag, 20e-6, 1e-6)
        energies.append(float(np.sum(s.velocities**2)))
    assert all(b < a for a, b in zip(energies, energies[1:]))

    D = 1e-48
    s = EnsembleState(np.zeros((10_000, 3)), np.zeros((10_000, 3)), rng_seed=8)
    t, e = [], []
    for _ in range(5):
        s = run(s, LinearLangevin(M, 0.0, D), 40e-6, 1e-6)
        t.append(s.time)
        e.append(0.5 * M * np.mean(np.sum(s.velocities**2, axis=1)))
    np.testing.assert_allclose(e, 3 * D * np.array(t) / M, rtol=0.05)
