import numpy as np
import pytest

from doublelambda import harness
from doublelambda.cli import run
from doublelambda.errors import ConfigError
from doublelambda.scheme import MHZ

EXPECTED_PRESETS = {
    "na2_hinze", "spectrum_weak", "spectrum_weak_low_g1", "velocity_weak", "spectrum_strong", "spectrum_strong_low_g3", "transparency_window", "compensation", "compensation_detuned", "narrowing_g1_1500", "narrowing_g1_1000",
    "narrowing_g1_500", "narrowing_g1_0", "stokes_generation", "transparency_gain", "transparency_gain_resonant", "switching", "mr_resonant", "mr_detuned", "amplifier_resonant", "amplifier_detuned",
}

SMALL = """\
[scheme]
preset = na2_hinze

[fields]
units = MHz
G1 = 60
G3 = 20
G4 = 1
Omega4 = 35

[grid]
nodes = 1801

[scan]
variable = Omega4
start = -100
stop = 100
count = 5

[propagation]
z_max = 0.2
step = 0.02
sample_every = 5
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_preset_manifest():
    assert set(harness.preset_names()) == EXPECTED_PRESETS


@pytest.mark.parametrize("name", sorted(EXPECTED_PRESETS))
def test_presets_validate(name):
    rep = harness.validate_config(preset=name)
    assert rep.ok, list(rep.lines())


def test_units_are_converted():
    cfg = harness.parse_config(SMALL)
    assert cfg.fields.G[0] == pytest.approx(60 * MHZ)
    assert cfg.fields.Omega4 == pytest.approx(35 * MHZ)
    raw = harness.parse_config(SMALL.replace("units = MHz", "units = rad/us"))
    assert raw.fields.G[0] == 60


def test_overrides():
    cfg = harness.parse_config(SMALL, nodes=3601, step=0.01)
    assert cfg.grid.n == 3601
    assert cfg.propagation.step == 0.01


def test_scheme_override_by_dotted_key():
    cfg = harness.parse_config(SMALL.replace("preset = na2_hinze", "preset = na2_hinze\nlevel_width.g = 150"))
    assert cfg.params.level_width["g"] == 150


def test_bad_value_reports_line():
    text = SMALL.replace("G3 = 20", "G3 = twenty")
    with pytest.raises(ConfigError, match="line 7"):
        harness.parse_config(text)


@pytest.mark.parametrize(
    "edit",
    [
        ("Omega4 = 35", "Omega4 = 35\nOmega2 = 3"),
        ("units = MHz", "units = GHz"),
        ("count = 5", "count = 1"),
        ("variable = Omega4", "variable = Omega2"),
        ("[grid]", "[gird]"),
        ("z_max = 0.2", "z_max = 0.25"),
    ],
)
def test_invalid_configs_rejected(edit):
    with pytest.raises(ConfigError):
        cfg = harness.parse_config(SMALL.replace(*edit))
        harness.propagate_config(cfg)


def test_validation_collects_all_failures(tmp_path):
    text = SMALL.replace("preset = na2_hinze", "preset = na2_hinze\nwavelengths_nm = 655, 756, 532, 504\nlevel_width.m = -1")
    rep = harness.validate_config(text=text)
    failed = {name for name, ok, _ in rep.checks if not ok}
    assert any("frequency matching" in n for n in failed)
    assert "rate positivity" in failed
    assert not rep.ok


def test_coarse_grid_fails_validation():
    rep = harness.validate_config(text=SMALL.replace("nodes = 1801", "nodes = 301"))
    assert not rep.ok
    assert [n for n, ok, _ in rep.checks if not ok] == ["velocity grid resolution"]


def test_csv_round_trip(tmp_path):
    cfg = harness.parse_config(SMALL)
    out = tmp_path / "trace.csv"
    harness.run_propagation(cfg, out)
    header, cols, data = harness.read_csv(out)
    assert cols == list(harness.TRACE_COLUMNS)
    assert any("G1 = 60" in h for h in header)
    np.testing.assert_allclose(data[:, 0], [0.0, 0.1, 0.2])
    assert data[0, cols.index("G4_re")] == pytest.approx(1.0)


def test_cli_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, SMALL)
    assert run(["validate", "--config", str(good)]) == 0
    assert run(["validate", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = _write(tmp_path, SMALL.replace("G1 = 60", "G1 = x"), "bad.ini")
    assert run(["propagate", "--config", str(bad)]) == 2
    assert run(["propagate", "--preset", "no_such_preset"]) == 2
    assert run(["propagate", "--config", str(good), "--out", str(tmp_path / "nodir" / "x.csv")]) == 2
    # a step far beyond the stability limit is a numerical failure
    assert run(["propagate", "--config", str(good), "--step", "0.2"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_zero_length_gives_single_row(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.replace("z_max = 0.2", "z_max = 0"))
    assert run(["propagate", "--config", str(cfg)]) == 0
    body = [ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")]
    assert len(body) == 2


def test_spectrum_deterministic_across_workers(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["spectrum", "--config", str(cfg), "--out", str(a)]) == 0
    assert run(["spectrum", "--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert a.read_text() == b.read_text()
    _, cols, data = harness.read_csv(a)
    assert cols == list(harness.SPECTRUM_COLUMNS) and data.shape == (5, 5)


def test_cli_manley_rowe_and_velocity(tmp_path):
    cfg = _write(tmp_path, SMALL + "\n[velocity]\nquantities = dr2, chi4\n")
    mr, vel = tmp_path / "mr.csv", tmp_path / "vel.csv"
    assert run(["manley-rowe", "--config", str(cfg), "--out", str(mr)]) == 0
    assert run(["velocity", "--config", str(cfg), "--out", str(vel)]) == 0
    _, cols, data = harness.read_csv(mr)
    assert cols == list(harness.MR_COLUMNS)
    _, cols, data = harness.read_csv(vel)
    assert cols == ["v_over_u", "maxwell_weight", "dr2", "chi4_re", "chi4_im"]
    assert data.shape[0] == 1801


def test_cli_switching(tmp_path):
    text = SMALL.replace("[propagation]", "[propagation]\nsweep = Omega4")
    cfg = _write(tmp_path, text)
    out = tmp_path / "sw.csv"
    assert run(["switching", "--config", str(cfg), "--out", str(out)]) == 0
    _, cols, data = harness.read_csv(out)
    assert cols == ["Omega4", "T4"]
    np.testing.assert_allclose(data[:, 0], [-100, -50, 0, 50, 100])
    assert np.all((data[:, 1] > 0) & (data[:, 1] < 1))


def test_cli_presets_listing(capsys):
    assert run(["presets"]) == 0
    assert set(capsys.readouterr().out.split()) == EXPECTED_PRESETS
