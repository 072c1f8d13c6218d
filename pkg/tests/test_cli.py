"""End-to-end command-line tests driven through main() in process."""

import json
import math

import numpy as np
import pytest

from feedphase import model
from feedphase.cli import main
from feedphase.model import drift_system as real_drift_system


def _read_csv(path):
    meta = {}
    header = None
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            meta[key] = value
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "feedphase" in capsys.readouterr().out


def test_missing_subcommand_is_an_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_trajectory_default_row_count(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["trajectory", "--out", str(out)]) == 0
    meta, header, rows = _read_csv(out)
    assert header == [
        "t",
        "px",
        "py",
        "pz",
        "purity",
        "e_plus",
        "alpha",
        "phi_unwrapped",
        "connection_partial",
    ]
    n_steps = int(meta["n_steps"])
    assert n_steps == 125664
    assert len(rows) == n_steps // 10 + 1


def test_trajectory_purity_column_without_decay(tmp_path):
    out = tmp_path / "run.csv"
    code = main(
        ["trajectory", "--gamma", "0", "--tau", "50", "--thin", "7", "--out", str(out)]
    )
    assert code == 0
    _, header, rows = _read_csv(out)
    purity = np.array([float(r[header.index("purity")]) for r in rows])
    assert np.abs(purity - 1.0).max() < 1e-8
    times = np.array([float(r[0]) for r in rows])
    assert np.allclose(np.diff(times), 7 * 0.01)


def test_tau_snapping_reported(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["phase", "--tau", "9.996", "--dt", "0.01", "--out", str(out)]) == 0
    meta, _, _ = _read_csv(out)
    assert float(meta["tau_requested"]) == 9.996
    assert float(meta["tau_snapped"]) == 10.0
    assert meta["n_steps"] == "1000"


def test_pi_unit_round_trip(tmp_path):
    out = tmp_path / "run.csv"
    args = ["phase", "--tau", "5", "--beta-pi", "0.375", "--a-pi", "0.4375", "--out", str(out)]
    assert main(args) == 0
    meta, _, _ = _read_csv(out)
    assert abs(float(meta["beta_pi"]) - 0.375) <= 1e-15
    assert abs(float(meta["a_pi"]) - 0.4375) <= 1e-15
    assert abs(float(meta["beta_rad"]) - 0.375 * math.pi) <= 1e-15


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# loss study\n"
        "gamma = 0.3\n"
        "beta_pi = 0.25\n"
        "tau = 5\n"
        "\n"
    )
    out = tmp_path / "run.csv"
    code = main(["phase", "--config", str(cfg), "--gamma", "0.7", "--out", str(out)])
    assert code == 0
    meta, _, _ = _read_csv(out)
    assert float(meta["gamma"]) == 0.7
    assert float(meta["beta_pi"]) == 0.25
    assert float(meta["tau_requested"]) == 5.0


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamm = 0.3\n")
    assert main(["phase", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_conflicting_angle_flags_rejected(capsys):
    code = main(["phase", "--theta-pi", "0.5", "--theta-rad", "1.0", "--tau", "1"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_phase_pole_run_is_exactly_zero(tmp_path):
    out = tmp_path / "run.json"
    args = [
        "phase",
        "--theta-pi", "0",
        "--cap-theta-pi", "0",
        "--a-pi", "0",
        "--gamma", "0.05",
        "--tau", "5",
        "--format", "json",
        "--out", str(out),
    ]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    assert payload["result"]["gamma_g_rad"] == 0.0
    assert payload["result"]["error"] is None


def test_phase_angle_shift_symmetry(tmp_path):
    # A and A + pi generate the same channel, so the records must agree
    results = []
    for a_pi in ("0.25", "1.25"):
        out = tmp_path / f"run{a_pi}.json"
        args = [
            "phase",
            "--gamma", "0.05",
            "--a-pi", a_pi,
            "--beta-pi", "0.5",
            "--tau", "150",
            "--format", "json",
            "--out", str(out),
        ]
        assert main(args) == 0
        results.append(json.loads(out.read_text())["result"])
    assert abs(results[0]["gamma_g_rad"] - results[1]["gamma_g_rad"]) < 1e-9
    assert abs(results[0]["overlap_abs"] - results[1]["overlap_abs"]) < 1e-9


def test_phase_degenerate_run_reports_failure(tmp_path):
    # straight decay through the origin: flagged record, exit code 3
    out = tmp_path / "run.json"
    args = [
        "phase",
        "--theta-pi", "0",
        "--cap-theta-pi", "0",
        "--a-pi", "0",
        "--gamma", "1.0",
        "--tau", "2",
        "--format", "json",
        "--out", str(out),
    ]
    assert main(args) == 3
    record = json.loads(out.read_text())["result"]
    assert record["error"] == "degenerate"
    assert record["gamma_g_rad"] is None
    # the crossing happens between samples; the flag reports the closure time
    assert record["failure_time"] == 2.0


def test_sweep_axis_flags_and_row_count(tmp_path):
    out = tmp_path / "grid.csv"
    args = [
        "sweep",
        "--axis1", "A:0:1:5",
        "--axis2", "beta:0:2:5",
        "--tau", "5",
        "--out", str(out),
    ]
    assert main(args) == 0
    meta, header, rows = _read_csv(out)
    assert header == ["axis1_value", "axis2_value", "gamma_g_rad", "gamma_g_pi", "degenerate"]
    assert len(rows) == 25
    assert meta["axis1_name"] == "A"
    assert abs(float(meta["axis1_max"]) - math.pi) < 1e-15
    assert meta["axis2_count"] == "5"
    # row-major order: the second axis varies fastest
    assert float(rows[0][0]) == float(rows[1][0])
    assert float(rows[0][1]) != float(rows[1][1])


def test_sweep_preset_and_axes_conflict(tmp_path, capsys):
    args = [
        "sweep",
        "--preset", "fig1:0.05",
        "--axis1", "A:0:1:3",
        "--axis2", "beta:0:2:3",
    ]
    assert main(args) == 2
    assert "config error" in capsys.readouterr().err


def test_sweep_requires_axes_or_preset(capsys):
    assert main(["sweep"]) == 2
    assert "config error" in capsys.readouterr().err


def test_sweep_bad_axis_spec(capsys):
    assert main(["sweep", "--axis1", "A:0:1", "--axis2", "beta:0:2:3"]) == 2
    capsys.readouterr()
    assert main(["sweep", "--axis1", "foo:0:1:3", "--axis2", "beta:0:2:3"]) == 2
    capsys.readouterr()


def test_sweep_worker_count_keeps_body_identical(tmp_path):
    def run(workers):
        out = tmp_path / f"grid{workers}.csv"
        args = [
            "sweep",
            "--axis1", "A:0:1:3",
            "--axis2", "beta:0:2:3",
            "--tau", "5",
            "--workers", str(workers),
            "--out", str(out),
        ]
        assert main(args) == 0
        text = out.read_text()
        body = [line for line in text.splitlines() if not line.startswith("# ")]
        return text, body

    text1, body1 = run(1)
    text2, body2 = run(2)
    assert body1 == body2
    assert "# workers = 1" in text1.splitlines()
    assert "# workers = 2" in text2.splitlines()


def test_sweep_json_cells_carry_status(tmp_path):
    out = tmp_path / "grid.json"
    args = [
        "sweep",
        "--axis1", "A:0:1:2",
        "--axis2", "beta:0:2:2",
        "--theta-pi", "0",
        "--cap-theta-pi", "0",
        "--gamma", "1.0",
        "--tau", "2",
        "--format", "json",
        "--out", str(out),
    ]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    cells = payload["cells"]
    assert len(cells) == 4
    for cell in cells:
        assert cell["degenerate"] is True
        assert cell["status"] == 1
        assert cell["gamma_g_rad"] is None
    assert "status_codes" in payload["metadata"]


def test_sweep_plot_writes_image(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "grid.csv"
    png = tmp_path / "grid.png"
    args = [
        "sweep",
        "--axis1", "A:0:1:3",
        "--axis2", "beta:0:2:3",
        "--tau", "5",
        "--out", str(out),
        "--plot", str(png),
    ]
    assert main(args) == 0
    assert png.stat().st_size > 0


def test_phase_stdout_matches_file(tmp_path, capsys):
    args = ["phase", "--tau", "5", "--gamma", "0.1"]
    assert main(args) == 0
    streamed = capsys.readouterr().out
    out = tmp_path / "run.csv"
    assert main(args + ["--out", str(out)]) == 0
    assert out.read_text() == streamed


def test_trajectory_json_structure(tmp_path):
    out = tmp_path / "run.json"
    args = ["trajectory", "--tau", "5", "--thin", "50", "--format", "json", "--out", str(out)]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    data = payload["data"]
    lengths = {len(v) for v in data.values()}
    assert lengths == {500 // 50 + 1}
    assert payload["metadata"]["command"] == "trajectory"


def test_verify_passes(tmp_path):
    out = tmp_path / "verify.txt"
    assert main(["verify", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.count("PASS") == 4
    assert "all checks passed" in text


def test_verify_catches_injected_drift_bug(tmp_path, monkeypatch):
    # flip one precession sign in the drift assembly; the independent
    # density-matrix oracle must notice and fail the run
    def broken(gamma, field, mu, ctrl):
        sys = real_drift_system(gamma, field, mu, ctrl)
        m = sys.m.copy()
        m[1, 0] = -m[1, 0]
        return type(sys)(m, sys.c)

    monkeypatch.setattr(model, "drift_system", broken)
    out = tmp_path / "verify.txt"
    assert main(["verify", "--out", str(out)]) == 3
    assert "FAIL" in out.read_text()
