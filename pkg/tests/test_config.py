import pytest
from hypothesis import given, settings, strategies as st

from motsim.atomkit import InvalidInputError
from motsim.config import RunConfig


def test_roundtrip_default(tmp_path):
    cfg = RunConfig()
    cfg.save(tmp_path / "c.ini")
    back = RunConfig.load(tmp_path / "c.ini")
    assert back == cfg
    assert back.digest() == cfg.digest()


@settings(max_examples=30)
@given(st.floats(-100, -0.1), st.floats(0.01, 5), st.tuples(*(st.floats(-50, 50),) * 3),
       st.integers(2, 10_000), st.booleans())
def test_roundtrip_random(det, s, bias, n, gravity):
    cfg = (RunConfig().update("beams", detuning_mhz=det, saturation_total=s)
           .update("field", bias_g=bias).update("simulation", n_atoms=n, gravity=gravity))
    assert RunConfig.from_ini(cfg.to_ini()) == cfg


def test_partial_file_with_comments():
    cfg = RunConfig.from_ini("[beams]\ndetuning_mhz = -20 ; red\n[transition]\nmismatch = 0.3\n")
    assert cfg.beams.detuning_mhz == -20.0
    assert cfg.build_transition().g_mismatch == pytest.approx(0.3)
    assert cfg.simulation == RunConfig().simulation


def test_digest_tracks_changes():
    assert RunConfig().digest() != RunConfig().update("simulation", seed=1).digest()


def test_builders():
    cfg = RunConfig()
    beams = cfg.build_beams()
    assert beams.s_total == pytest.approx(0.4)
    assert cfg.build_field().gradient == pytest.approx(0.2)
    assert cfg.probe_intensity == pytest.approx(1000.0)


@pytest.mark.parametrize("text", [
    "[nonsense]\na = 1\n",
    "[beams]\ncolour = red\n",
    "[simulation]\ngravity = maybe\n",
])
def test_rejects_bad_files(text):
    with pytest.raises(InvalidInputError):
        RunConfig.from_ini(text)
