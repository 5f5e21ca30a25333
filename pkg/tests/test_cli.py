"""Config parsing, CSV emission, and manifest checks for the batch front-end."""

import json
import math

import numpy as np
import pytest

from qbattery.cli import ConfigError, _cell, main, parse_config, run
from qbattery.experiments import derive_seed
from qbattery.model import ChargeSpec, suggest_fock_cutoff


def write_config(path, text):
    path.write_text(text)
    return str(path)


MINIMAL = """
[model]
n_spins = 1
fock_cutoff = 8

[charge]
mode = thermal
n_b = 0.2

[sim]
dt = 0.01
t_max = 1.0
sample_stride = 20
guard_tol = 1.0

[experiment]
kind = dynamics

[output]
prefix = mini
"""


def test_parse_minimal(tmp_path):
    rc = parse_config(write_config(tmp_path / "c.cfg", MINIMAL))
    assert rc.spec.n_spins == 1
    assert rc.spec.fock_cutoff == 8
    assert rc.spec.charge.mode == "thermal"
    assert rc.dt == 0.01
    assert rc.t_max == 1.0
    assert rc.experiment == "dynamics"
    assert rc.prefix == "mini"
    joined = "\n".join(rc.defaults_applied)
    assert "model.omega_a = 1.0" in joined
    assert "model.kappa = 1.0" in joined
    assert "charge.f = 0.0" in joined


def test_unknown_key_reports_line(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", "[model]\nn_spins = 2\nbogus = 3\n")
    with pytest.raises(ConfigError, match=r"line 3.*model\.bogus"):
        parse_config(cfg)


def test_unknown_section_reports_line(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", "[model]\nn_spins = 2\n\n[extra]\nx = 1\n")
    with pytest.raises(ConfigError, match=r"line 4.*extra"):
        parse_config(cfg)


def test_duplicate_key_rejected(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", "[model]\nn_spins = 2\nn_spins = 3\n")
    with pytest.raises(ConfigError, match=r"line 3.*duplicate key model\.n_spins"):
        parse_config(cfg)


def test_bad_value_reports_key_path(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", "[model]\nn_spins = two\n")
    with pytest.raises(ConfigError, match=r"line 2.*model\.n_spins.*integer"):
        parse_config(cfg)


def test_negative_kappa_rejected(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 1\nkappa = -0.5\n\n[experiment]\nkind = dynamics\n",
    )
    with pytest.raises(ConfigError, match=r"line 3.*kappa"):
        parse_config(cfg)


def test_required_keys_enforced(tmp_path):
    cfg = write_config(tmp_path / "a.cfg", "[experiment]\nkind = dynamics\n")
    with pytest.raises(ConfigError, match="n_spins"):
        parse_config(cfg)
    cfg = write_config(tmp_path / "b.cfg", "[model]\nn_spins = 1\n")
    with pytest.raises(ConfigError, match="kind"):
        parse_config(cfg)


def test_key_outside_section_rejected(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", "n_spins = 1\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config(cfg)


def test_kind_mismatched_key_rejected(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 1\n\n[experiment]\nkind = dynamics\nn_values = 1, 2\n",
    )
    with pytest.raises(ConfigError, match=r"line 6.*n_values.*dynamics"):
        parse_config(cfg)


def test_thermal_drive_amplitude_warns(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 1\nfock_cutoff = 6\n\n"
        "[charge]\nmode = thermal\nn_b = 0.3\nf = 2.0\n\n"
        "[experiment]\nkind = dynamics\n",
    )
    rc = parse_config(cfg)
    assert any("ignores the drive amplitude" in w for w in rc.warnings)


def test_auto_fock_cutoff_resolved_and_echoed(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 2\n\n[charge]\nmode = thermal\nn_b = 0.5\n\n"
        "[experiment]\nkind = dynamics\n",
    )
    rc = parse_config(cfg)
    expected = suggest_fock_cutoff(
        ChargeSpec(mode="thermal", n_b=0.5), 1.0, n_spins=2, guard_tol=1e-6
    )
    assert rc.spec.fock_cutoff == expected
    assert any("fock_cutoff" in d and "auto" in d for d in rc.defaults_applied)


def test_j_axis_styles(tmp_path):
    base = "[model]\nn_spins = 1\n\n[experiment]\nkind = sweep_j\n"
    rc = parse_config(write_config(tmp_path / "a.cfg", base + "j_values = 0, 0.5, 1\n"))
    assert rc.params["j_values"] == [0.0, 0.5, 1.0]
    rc = parse_config(
        write_config(tmp_path / "b.cfg", base + "j_min = 0\nj_max = 1\npoints = 5\n")
    )
    assert rc.params["j_values"] == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ConfigError, match="not both"):
        parse_config(
            write_config(tmp_path / "c.cfg", base + "j_values = 1\npoints = 5\n")
        )
    with pytest.raises(ConfigError, match="j_min"):
        parse_config(write_config(tmp_path / "d.cfg", base))


def test_cell_formatting():
    assert _cell(None) == ""
    assert _cell(math.nan) == ""
    assert _cell(0.0) == "0"
    assert _cell(0.1) == "0.1"
    assert _cell(1 / 3) == "0.333333333333"
    assert _cell(7) == "7"
    assert _cell(np.float64(2.5)) == "2.5"


def test_dynamics_run_outputs(tmp_path):
    rc = parse_config(write_config(tmp_path / "c.cfg", MINIMAL))
    code = run(rc, out_dir=str(tmp_path / "out"), log=lambda *a: None)
    assert code == 0
    lines = (tmp_path / "out" / "mini.csv").read_text().split("\n")
    assert lines[0] == "t,delta_e,ergotropy,efficiency,power"
    assert lines[1] == "0,0,0,,"
    assert lines[-1] == ""  # trailing newline
    n_steps = round(1.0 / 0.01)
    assert len(lines) == 2 + n_steps // 20 + 1
    manifest = json.loads((tmp_path / "out" / "mini.manifest.json").read_text())
    assert manifest["experiment"] == "dynamics"
    assert manifest["outputs"] == ["mini.csv"]
    assert manifest["resolved"]["fock_cutoff"] == 8
    assert manifest["config"]["charge"]["n_b"] == 0.2
    assert manifest["failures"] == []
    assert manifest["wall_time_s"] > 0


def test_rerun_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.cfg", MINIMAL)
    for sub in ("one", "two"):
        rc = parse_config(cfg)
        assert run(rc, out_dir=str(tmp_path / sub), log=lambda *a: None) == 0
    a = (tmp_path / "one" / "mini.csv").read_bytes()
    b = (tmp_path / "two" / "mini.csv").read_bytes()
    assert a == b


def test_spectrum_run_outputs(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 3\nfock_cutoff = 4\n\n"
        "[experiment]\nkind = spectrum\nj_min = 0.2\nj_max = 1.2\npoints = 6\n\n"
        "[output]\nprefix = sp\n",
    )
    rc = parse_config(cfg)
    assert run(rc, out_dir=str(tmp_path / "out"), log=lambda *a: None) == 0
    levels = (tmp_path / "out" / "sp.levels.csv").read_text().split("\n")
    assert levels[0] == "j," + ",".join(f"level_{k}" for k in range(8))
    assert len(levels) == 1 + 6 + 1
    order = (tmp_path / "out" / "sp.order.csv").read_text().split("\n")
    assert order[0] == "j,m_z,xi_z"
    crossings = (tmp_path / "out" / "sp.crossings.csv").read_text().split("\n")
    assert crossings[0] == "j_cross"
    assert float(crossings[1]) == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    manifest = json.loads((tmp_path / "out" / "sp.manifest.json").read_text())
    assert manifest["crossings"][0] == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    # the simple closed-form candidates do not match the computed crossings
    assert manifest["closed_form"]["consistent"] is False


DISORDER = """
[model]
n_spins = 1
fock_cutoff = 8

[charge]
mode = thermal
n_b = 0.2

[sim]
t_max = 400
guard_tol = 1.0

[experiment]
kind = disorder
w = 0.4
realizations = 2

[output]
prefix = dis
"""


def test_disorder_run_records_seeds(tmp_path):
    rc = parse_config(write_config(tmp_path / "c.cfg", DISORDER))
    assert run(rc, out_dir=str(tmp_path / "out"), seed=99, log=lambda *a: None) == 0
    lines = (tmp_path / "out" / "dis.csv").read_text().split("\n")
    header = "realization,seed,delta_e_ss,ergotropy_ss,efficiency_ss,residual"
    assert lines[0] == header
    assert len(lines) == 1 + 2 + 1
    for k, line in enumerate(lines[1:3]):
        cells = line.split(",")
        assert cells[0] == str(k)
        assert int(cells[1]) == derive_seed(99, k)
        assert float(cells[5]) < 1e-6
    manifest = json.loads((tmp_path / "out" / "dis.manifest.json").read_text())
    assert manifest["seeds"] == [derive_seed(99, 0), derive_seed(99, 1)]
    assert manifest["ensemble"]["n_success"] == 2
    assert manifest["flags"]["seed"] == 99


def test_sweep_j_run_outputs(tmp_path):
    cfg = write_config(
        tmp_path / "c.cfg",
        "[model]\nn_spins = 1\nfock_cutoff = 8\n\n"
        "[charge]\nmode = thermal\nn_b = 0.2\n\n"
        "[sim]\nt_max = 400\nguard_tol = 1.0\n\n"
        "[experiment]\nkind = sweep_j\nj_values = 0.3, 0.6\n\n"
        "[output]\nprefix = sw\n",
    )
    rc = parse_config(cfg)
    assert run(rc, out_dir=str(tmp_path / "out"), log=lambda *a: None) == 0
    lines = (tmp_path / "out" / "sw.csv").read_text().split("\n")
    assert lines[0] == "j,delta_e_ss,ergotropy_ss,efficiency_ss,residual"
    assert lines[1].startswith("0.3,")
    # a single spin has no hopping term, so no crossings exist in the window
    crossings = (tmp_path / "out" / "sw.crossings.csv").read_text()
    assert crossings == "j_cross\n"
    manifest = json.loads((tmp_path / "out" / "sw.manifest.json").read_text())
    assert manifest["crossings"] == []
    assert manifest["points"][0]["converged"] is True


def test_main_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path / "bad.cfg", "[model]\nwhat = 1\n")
    assert main(["--config", bad]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2
    with pytest.raises(SystemExit):
        main(["--config", bad, "--no-such-flag"])


def test_main_runs_dynamics(tmp_path, capsys):
    good = write_config(tmp_path / "good.cfg", MINIMAL)
    assert main(["--config", good, "--out-dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "default: model.omega_a = 1.0" in out
    assert (tmp_path / "out" / "mini.csv").exists()
