"""End-to-end checks of the command line: config handling, file output,
determinism and exit codes (0 ok, 2 config, 3 numerics)."""

import csv
import json

import numpy as np
import pytest

from qdcav import cli
from qdcav.hilbert import InvariantViolation
from qdcav.series import SweepCurve

SYS1 = {"g": 25.0, "kappa": 27.0, "gamma": 0.1}


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def eigen_config(tmp_path, **extra):
    payload = {
        "scenario": "eigenfrequencies",
        "system": dict(SYS1),
        "sweep": {"delta_min_ghz": -100.0, "delta_max_ghz": 100.0, "n_points": 201},
    }
    payload.update(extra)
    return write_config(tmp_path, "eigen.json", payload)


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, rows


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out.split()
    assert out == list(cli.SCENARIO_NAMES)


def test_validate_accepts_good_config(tmp_path, capsys):
    cfg = eigen_config(tmp_path)
    assert cli.main(["validate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("valid")
    assert "note: strong coupling gate: True" in out
    assert "violation:" not in out


def test_validate_rejects_bad_rates_and_eta(tmp_path, capsys):
    cfg = eigen_config(
        tmp_path,
        system={"g": 25.0, "kappa": 27.0, "gamma": -1.0},
        calibration={"eta": 1.5},
    )
    assert cli.main(["validate", "--config", cfg]) == 2
    out = capsys.readouterr().out
    assert "violation: system.gamma" in out
    assert "violation: calibration.eta" in out
    assert out.strip().endswith("invalid")


def test_validate_flags_grid_against_stability_gate(tmp_path, capsys):
    payload = {
        "scenario": "pl-decay",
        "system": dict(SYS1),
        "grid": {"t_start": 0.0, "t_end": 1.0, "n_steps": 10},
    }
    cfg = write_config(tmp_path, "pl.json", payload)
    assert cli.main(["validate", "--config", cfg]) == 2
    assert "stability" in capsys.readouterr().out


def test_run_eigenfrequencies_files_and_values(tmp_path, capsys):
    cfg = eigen_config(tmp_path)
    out_dir = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out_dir)]) == 0
    printed = capsys.readouterr().out.splitlines()
    csv_path = out_dir / "eigenfrequencies_curve.csv"
    meta_path = out_dir / "eigenfrequencies_meta.json"
    assert str(csv_path) in printed and str(meta_path) in printed

    header, rows = read_rows(csv_path)
    assert header == ["delta_ghz", "re_plus", "im_plus", "re_minus", "im_minus"]
    assert len(rows) == 201
    center = min(rows, key=lambda r: abs(r[0]))
    assert center[1] - center[3] == pytest.approx(42.14724190264412, rel=1e-12)

    meta = json.loads(meta_path.read_text())
    assert meta["scenario"] == "eigenfrequencies"
    assert meta["files"] == ["eigenfrequencies_curve.csv"]
    assert meta["seed"] is None
    assert meta["config"]["system"]["g"] == 25.0


def test_run_reports_missing_field(tmp_path, capsys):
    cfg = write_config(
        tmp_path, "bad.json",
        {"scenario": "eigenfrequencies", "system": {"g": 25.0, "kappa": 27.0}},
    )
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "missing required field system.gamma" in capsys.readouterr().err


def test_run_rejects_unknown_scenario(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"scenario": "warp", "system": SYS1})
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_config_parse_error_names_location(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"scenario": }')
    assert cli.main(["validate", "--config", str(path)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_set_overrides_change_the_run(tmp_path, capsys):
    cfg = eigen_config(tmp_path)
    out_dir = tmp_path / "out"
    code = cli.main(
        [
            "run", "--config", cfg, "--out", str(out_dir),
            "--set", "system.g=21.2", "--set", "system.kappa=27.2",
            "--set", "sweep.n_points=5",
        ]
    )
    assert code == 0
    capsys.readouterr()
    header, rows = read_rows(out_dir / "eigenfrequencies_curve.csv")
    assert len(rows) == 5
    center = min(rows, key=lambda r: abs(r[0]))
    assert center[1] - center[3] == pytest.approx(32.60904782418524, rel=1e-12)


def test_malformed_override_is_a_config_error(tmp_path, capsys):
    cfg = eigen_config(tmp_path)
    assert cli.main(["run", "--config", cfg, "--set", "no_equals"]) == 2
    assert "key=value" in capsys.readouterr().err


def test_apply_overrides_value_parsing():
    cfg = cli.apply_overrides({}, ["a.b=2.5", "a.c=hello", "d=[1,2]"])
    assert cfg == {"a": {"b": 2.5, "c": "hello"}, "d": [1, 2]}
    with pytest.raises(cli.ConfigError, match="non-object"):
        cli.apply_overrides({"a": 1}, ["a.b=2"])


def test_spectrum_rerun_is_byte_identical(tmp_path, capsys):
    payload = {
        "scenario": "spectrum",
        "system": dict(SYS1),
        "drive": {
            "amplitude": 0.1,
            "detuning_min_ghz": -60.0,
            "detuning_max_ghz": 60.0,
            "n_points": 9,
        },
    }
    cfg = write_config(tmp_path, "spec.json", payload)
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert cli.main(["run", "--config", cfg, "--out", str(d)]) == 0
    capsys.readouterr()
    for name in ("spectrum_scan.csv", "spectrum_meta.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


TRAJ_PAYLOAD = {
    "scenario": "cw-pulse",
    "system": dict(SYS1),
    "solver": {"method": "trajectories", "n_traj": 140},
    "seed": 7,
    "grid": {"t_start": 0.0, "t_end": 0.08, "n_steps": 400},
    "drive": {
        "cw_power_nw": 12.0,
        "pulse_power_nw": 0.2,
        "pulse_fwhm_ns": 0.010,
        "pulse_center_ns": 0.04,
        "k_phases": 4,
    },
}


def test_trajectory_run_independent_of_threads(tmp_path, capsys):
    cfg = write_config(tmp_path, "traj.json", TRAJ_PAYLOAD)
    outputs = {}
    for label, threads in (("t1", "1"), ("t2", "2"), ("t1_again", "1")):
        d = tmp_path / label
        code = cli.main(
            ["run", "--config", cfg, "--out", str(d), "--threads", threads]
        )
        assert code == 0
        outputs[label] = d
    capsys.readouterr()
    names = [
        "cw-pulse_signal.csv",
        "cw-pulse_control.csv",
        "cw-pulse_both.csv",
        "cw-pulse_delta.csv",
        "cw-pulse_meta.json",
    ]
    for name in names:
        ref = (outputs["t1"] / name).read_bytes()
        assert (outputs["t2"] / name).read_bytes() == ref
        assert (outputs["t1_again"] / name).read_bytes() == ref


def test_trajectories_require_a_seed(tmp_path, capsys):
    payload = dict(TRAJ_PAYLOAD)
    payload.pop("seed")
    cfg = write_config(tmp_path, "noseed.json", payload)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "seed is required" in capsys.readouterr().err


def test_seed_flag_fills_in(tmp_path, capsys):
    payload = dict(TRAJ_PAYLOAD)
    payload.pop("seed")
    payload["solver"] = {"method": "trajectories", "n_traj": 8}
    cfg = write_config(tmp_path, "flag.json", payload)
    out_dir = tmp_path / "out"
    code = cli.main(["run", "--config", cfg, "--out", str(out_dir), "--seed", "5"])
    assert code == 0
    capsys.readouterr()
    meta = json.loads((out_dir / "cw-pulse_meta.json").read_text())
    assert meta["seed"] == 5


def test_numerical_failure_exits_3(tmp_path, capsys, monkeypatch):
    def boom(resolved, threads):
        raise InvariantViolation("trace defect 1.0e-2 at step 3")

    monkeypatch.setitem(cli._RUNNERS, "eigenfrequencies", boom)
    cfg = eigen_config(tmp_path)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert "numerical invariant failure" in capsys.readouterr().err


def test_write_curve_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.normal(size=7)
    curve = SweepCurve("x", x, {"a": rng.normal(size=7), "b": rng.normal(size=7)})
    path = tmp_path / "curve.csv"
    cli.write_curve_csv(path, curve)
    header, rows = read_rows(path)
    assert header == ["x", "a", "b"]
    back = np.array(rows)
    # 17 significant digits round-trip float64 exactly
    assert np.array_equal(back[:, 0], x)
    assert np.array_equal(back[:, 1], curve.channels["a"])
    assert np.array_equal(back[:, 2], curve.channels["b"])
    with pytest.raises(TypeError):
        cli.write_curve_csv(tmp_path / "bad.csv", {"not": "a curve"})
