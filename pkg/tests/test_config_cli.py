import filecmp

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biphoton import cli
from biphoton.config import ConfigError, load_config, parse_config, parse_quantity
from biphoton.detection import read_histogram_csv
from biphoton.fitting import FreeParameter
from biphoton.spectral import CrystalKind, FilterShape

from conftest import S2_PER_CM, TOTAL_B

SMALL = """\
crystal.kind = type2
crystal.length = 0.4 mm
crystal.D = 1.5 ps/cm
arm.1.k2 = 3.2e-28 s2/cm
arm.1.z = 20 m
arm.2.k2 = 3.2e-28 s2/cm
arm.2.z = 20 m
detector.resolution = 100 ps
mca.bin_width = 10 ps
mca.n_bins = 400
mca.n_pairs = 20000
mca.seed = 4
outputs = spectrum, g1, g2, g2_farfield, smeared, histogram
"""


def preset(name):
    return parse_config(cli.preset_text(name), f"{name}.cfg")


# configuration files

def test_fig2b_preset_contents():
    cfg = preset("fig2b")
    assert cfg.crystal.kind is CrystalKind.TYPE_II
    assert cfg.crystal.length == pytest.approx(0.4e-3)
    assert cfg.crystal.D == pytest.approx(1.5e-10)
    assert cfg.budget.arms == ((pytest.approx(3.2e-28 * S2_PER_CM), 500.0),) * 2
    assert cfg.budget.total_B == pytest.approx(TOTAL_B)
    assert cfg.detector.combined_fwhm == pytest.approx(700e-12)


def test_all_presets_load():
    names = cli.preset_names()
    assert names == ["fig2a", "fig2b", "fig2c", "fig2d"]
    cfgs = {n: preset(n) for n in names}
    assert cfgs["fig2a"].budget.total_B == 0
    assert cfgs["fig2c"].crystal.kind is CrystalKind.TYPE_I_DEGENERATE
    assert cfgs["fig2c"].crystal.D2 == pytest.approx(5.9e-28 * S2_PER_CM)
    assert cfgs["fig2d"].filter.shape is FilterShape.GAUSSIAN
    assert cfgs["fig2d"].filter.fwhm_lambda == pytest.approx(10e-9)


@pytest.mark.parametrize("text, unit, dim, value", [
    ("1.5", "ps/cm", "inverse_velocity", 1.5e-10),
    ("3.2e-28", "s2/cm", "gvd", 3.2e-26),
    ("3.2e-28", "s^2/cm", "gvd", 3.2e-26),
    ("0.4", "mm", "length", 4e-4),
    ("916", "nm", "length", 9.16e-7),
    ("700", "ps", "time", 7e-10),
    ("32", "ps2", "budget", 3.2e-23),
])
def test_units(text, unit, dim, value):
    assert parse_quantity(f"{text} {unit}", dim) == pytest.approx(value, rel=1e-12)


@given(st.floats(-1e6, 1e6))
def test_bare_numbers_are_si(x):
    assert parse_quantity(repr(x), "time") == x


def test_unknown_unit():
    with pytest.raises(ValueError, match="unknown unit"):
        parse_quantity("3 parsecs", "length")


def _error(text):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "t.cfg")
    return err.value


def test_even_grid_size_rejected():
    text = SMALL + "grid.mode = manual\ngrid.omega_max = 4e14\ngrid.n_omega = 4096\n" \
                   "grid.tau_max = 1e-9\ngrid.n_tau = 2001\n"
    err = _error(text)
    assert err.key == "grid.n_omega" and err.line == 16


def test_manual_grid_sampling_checked():
    text = SMALL + "grid.mode = manual\ngrid.omega_max = 4e14\ngrid.n_omega = 4097\n" \
                   "grid.tau_max = 1e-9\ngrid.n_tau = 2001\n"
    assert "n_points" in str(_error(text))


def test_unknown_key_names_line():
    err = _error(SMALL + "crystal.colour = blue\n")
    assert err.key == "crystal.colour" and err.line == 14
    assert "t.cfg:14" in str(err)


def test_duplicate_and_malformed_lines():
    assert _error(SMALL + "crystal.length = 1 mm\n").line == 14
    assert _error(SMALL + "this is not a pair\n").line == 14
    assert _error(SMALL + "mca.seed =\n").line == 14
    assert _error(SMALL.replace("mca.n_bins = 400", "mca.n_bins = inf")).key == "mca.n_bins"


def test_validation_names_field():
    assert _error(SMALL.replace("0.4 mm", "-0.4 mm")).key.startswith("crystal")
    assert _error(SMALL.replace("type2", "type3")).key == "crystal.kind"
    assert _error(SMALL + "outputs2 = g2\n").key == "outputs2"


def test_empty_arms_is_valid():
    text = "\n".join(l for l in SMALL.splitlines() if not l.startswith(("arm.", "outputs")))
    cfg = parse_config(text)
    assert cfg.budget.total_B == 0 and cfg.arm_lengths == ()


def test_farfield_without_budget_rejected():
    text = "\n".join(l for l in SMALL.splitlines() if not l.startswith("arm."))
    assert _error(text).key == "outputs"


def test_free_parameter_and_comments():
    cfg = parse_config("# header\n" + SMALL + "fit.free = total_B   # trailing note\n")
    assert cfg.free_parameter is FreeParameter.TOTAL_B


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# command line

@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def _summary(path):
    return dict(line.split(" = ", 1) for line in path.read_text().splitlines())


def test_simulate_writes_outputs(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["simulate", str(small_cfg), "--out", str(out)]) == 0
    for name in ("spectrum", "g1", "g2", "g2_farfield", "smeared", "histogram"):
        assert (out / f"{name}.csv").exists()
    s = _summary(out / "summary.txt")
    assert float(s["total_B_s2"]) == pytest.approx(2 * 3.2e-26 * 20)
    for key in ("fwhm_g2_s", "fwhm_smeared_s", "z_dis_m", "first_zero_width_g2_s"):
        assert key in s
    assert int(s["histogram_total"]) == 20000
    assert read_histogram_csv(out / "histogram.csv").total == 20000


def test_simulate_is_byte_identical(small_cfg, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d in (a, b):
        assert cli.main(["simulate", str(small_cfg), "--out", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert match == names and not mismatch and not errors
    assert cli.main(["simulate", str(small_cfg), "--out", str(c), "--seed", "99"]) == 0
    assert not filecmp.cmp(a / "histogram.csv", c / "histogram.csv", shallow=False)
    assert filecmp.cmp(a / "g2.csv", c / "g2.csv", shallow=False)


def test_simulate_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL + "nonsense = 1\n")
    assert cli.main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "nonsense" in capsys.readouterr().err


def test_presets_list_and_show(capsys):
    assert cli.main(["presets", "list"]) == 0
    listed = capsys.readouterr().out
    assert all(name in listed for name in ("fig2a", "fig2b", "fig2c", "fig2d"))
    assert cli.main(["presets", "show", "fig2b"]) == 0
    assert "arm.1.k2" in capsys.readouterr().out
    assert cli.main(["presets", "show", "nope"]) == 1


@pytest.fixture(scope="module")
def fig2b_histogram(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2b")
    assert cli.main(["simulate", "fig2b", "--out", str(out)]) == 0
    return out / "histogram.csv"


def test_fit_recovers_k2(fig2b_histogram, tmp_path, capsys):
    report = tmp_path / "report.txt"
    code = cli.main(["fit", "fig2b", str(fig2b_histogram), "--lo", "2e-23", "--hi", "5e-23",
                     "--report", str(report)])
    assert code == 0
    values = dict(l.split(" = ") for l in report.read_text().splitlines())
    assert values["converged"] == "true"
    assert float(values["k2_per_arm_s2_per_cm"]) == pytest.approx(3.2e-28, rel=0.05)
    assert report.read_text() == capsys.readouterr().out


def test_fit_bounds_excluding_truth(fig2b_histogram, capsys):
    code = cli.main(["fit", "fig2b", str(fig2b_histogram), "--lo", "10 ps2", "--hi", "20 ps2"])
    assert code == 2
    assert "at_bound = true" in capsys.readouterr().out


def test_fit_empty_histogram(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("bin_center_s,counts\n")
    assert cli.main(["fit", "fig2b", str(empty), "--lo", "2e-23", "--hi", "5e-23"]) == 1
    zeros = tmp_path / "zeros.csv"
    zeros.write_text("bin_center_s,counts\n0.0,0\n1e-10,0\n")
    assert cli.main(["fit", "fig2b", str(zeros), "--lo", "2e-23", "--hi", "5e-23"]) == 1


def test_fit_malformed_csv_names_row(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("bin_center_s,counts\n0.0,1\n1e-10,one\n")
    assert cli.main(["fit", "fig2b", str(bad), "--lo", "2e-23", "--hi", "5e-23"]) == 1
    assert "row 3" in capsys.readouterr().err


def test_fit_missing_histogram(tmp_path, capsys):
    assert cli.main(["fit", "fig2b", str(tmp_path / "x.csv"), "--lo", "1", "--hi", "2"]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_spectrum_output_is_decimated(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["simulate", "fig2b", "--out", str(out)]) == 0
    rows = np.loadtxt(out / "spectrum.csv", delimiter=",", skiprows=1)
    assert rows.shape[0] <= 4097
    assert rows[rows.shape[0] // 2, 1] == 1.0
