import csv

import numpy as np
import pytest

from motsim.atomkit import get_preset
from motsim.cli import main
from motsim.constants import KB
from motsim.thermometry import TofSeries, write_series_csv


def test_limits(capsys):
    assert main(["limits", "Tm-530.7"]) == 0
    out = capsys.readouterr().out
    assert "Doppler limit" in out and "8 uK" in out


def test_limits_unknown_preset(capsys):
    assert main(["limits", "Xx-1"]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_tof_fit_csv(tmp_path, capsys):
    tm = get_preset("Tm-410.6")
    t = np.linspace(0, 8e-3, 9)
    r = np.sqrt(80e-6**2 + 2 * KB * 25e-6 / tm.mass * t**2)
    write_series_csv(tmp_path / "s.csv", TofSeries(t, r))
    assert main(["tof-fit", str(tmp_path / "s.csv"), "--out", str(tmp_path / "fit.csv")]) == 0
    assert "T = 25.000" in capsys.readouterr().out
    rows = list(csv.DictReader(open(tmp_path / "fit.csv")))
    assert float(rows[0]["temperature_uK"]) == pytest.approx(25.0, rel=1e-5)


def test_sweep_model_only(tmp_path):
    assert main(["sweep", "--param", "intensity", "--values", "0.2,1,2", "--model-only",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_intensity.csv").exists()
    assert (tmp_path / "plot_intensity.csv").exists()


def test_simulate_small(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\nn_atoms = 32\nmax_time_ms = 0.2\nwindow_ms = 0.1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
    lines = (tmp_path / "run/snapshot.csv").read_text().splitlines()
    assert lines[0] == "index,x,y,z,vx,vy,vz" and len(lines) == 33
    assert (tmp_path / "run/history.csv").exists()
