"""Command line: run, sweep, landscape and check."""

import csv
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phasefatigue.cli import (EXIT_DIVERGED, EXIT_INVALID, EXIT_OK, FIELD_COLUMNS, SWEEP_COLUMNS,
                              first_crossing, fmt, landscape_filename, main, value_at)
from phasefatigue.solver import COLUMNS

from conftest import MINIMAL


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) if x else None for x in r] for r in rows[1:]]


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_special_values():
    assert fmt(None) == ""
    assert fmt(3) == "3"
    assert fmt(0.1) == "0.1"


def test_value_at_exact_hit_and_interpolation():
    t = np.array([0.0, 0.1, 0.2])
    v = np.array([1.0, 3.0, 4.0])
    assert value_at(t, v, 0.1) == 3.0
    assert value_at(t, v, 0.15) == pytest.approx(3.5)


def test_first_crossing():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    assert first_crossing(t, [0.0, 0.5, 1.0, 1.0], 0.9) == pytest.approx(1.8)
    assert first_crossing(t, [0.95, 1.0, 1.0, 1.0], 0.9) == 0.0
    assert first_crossing(t, [0.0, 0.1, 0.2, 0.3], 0.9) is None


def test_run_writes_trajectory(write_config, tmp_path):
    path = write_config(**{"trajectory_path = traj.csv": f"trajectory_path = {tmp_path / 'traj.csv'}"})
    assert main(["run", str(path)]) == EXIT_OK
    header, rows = _read(tmp_path / "traj.csv")
    assert tuple(header) == COLUMNS
    t = [r[0] for r in rows]
    assert t[0] == 0.0 and t[-1] == pytest.approx(1.0)
    assert all(b > a for a, b in zip(t, t[1:]))


def test_run_zero_load_gives_zero_columns(write_config, tmp_path):
    path = write_config(**{"amplitude = 0.6": "amplitude = 0.0"})
    assert main(["run", str(path), "--trajectory", str(tmp_path / "z.csv")]) == EXIT_OK
    _, rows = _read(tmp_path / "z.csv")
    assert all(v == 0.0 for r in rows for v in r[1:])


def test_run_twice_is_byte_identical(write_config, tmp_path):
    path = write_config()
    main(["run", str(path), "--trajectory", str(tmp_path / "a.csv")])
    main(["run", str(path), "--trajectory", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cyclic_run_phi_max_is_monotone(write_config, tmp_path):
    text = MINIMAL.replace("t_end = 1.0", "t_end = 8.0").replace("amplitude = 0.6", "amplitude = 1.0")
    runs = {}
    for label, dt in (("full", "0.02"), ("half", "0.01")):
        path = write_config(text, name=f"{label}.ini", **{"dt = auto": f"dt = {dt}", "sample_every = 5": "sample_every = 1"})
        assert main(["run", str(path), "--trajectory", str(tmp_path / f"{label}.csv")]) == EXIT_OK
        _, rows = _read(tmp_path / f"{label}.csv")
        runs[label] = (float(dt), np.array([r[1] for r in rows]), np.array([r[0] for r in rows]))
    for dt, phi_max, _ in runs.values():
        positive = phi_max > 0
        drops = np.diff(phi_max)[positive[:-1]]
        assert phi_max[-1] > 0.05
        assert np.all(drops >= -10 * dt)
    # The half-dt rerun agrees with the coarse trace at the common times.
    dt, coarse, t = runs["full"]
    _, fine, _ = runs["half"]
    assert np.max(np.abs(fine[::2] - coarse)) <= 0.1 * np.max(coarse)


def test_run_writes_field_snapshots(write_config, tmp_path):
    path = write_config()
    fields = tmp_path / "fields.csv"
    assert main(["run", str(path), "--trajectory", str(tmp_path / "t.csv"), "--fields", str(fields)]) == EXIT_OK
    header, rows = _read(fields)
    assert tuple(header) == FIELD_COLUMNS
    _, traj = _read(tmp_path / "t.csv")
    assert len(rows) == len(traj) * 21
    assert rows[20][1] == 20 and rows[20][2] == 1.0


def test_run_thermal_fields_have_temperature(write_config, tmp_path):
    path = write_config(**{"a = 1.0": "a = 1.0\nc = 1.0\nk_q = 0.1\nvarkappa = 0.0\ntheta_ref = 1.0"})
    fields = tmp_path / "fields.csv"
    assert main(["run", str(path), "--trajectory", str(tmp_path / "t.csv"), "--fields", str(fields)]) == EXIT_OK
    header, rows = _read(fields)
    assert header[-1] == "theta" and rows[0][-1] == 1.0


def test_run_invalid_config_exit_code(write_config, capsys):
    path = write_config(**{"rho = 1.0": "rho = 0"})
    assert main(["run", str(path)]) == EXIT_INVALID
    assert "material.rho: rho must be > 0" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_run_divergence_exit_code(write_config, tmp_path, capsys):
    path = write_config(**{"amplitude = 0.6": "amplitude = 1e308"})
    assert main(["run", str(path), "--trajectory", str(tmp_path / "t.csv")]) == EXIT_DIVERGED
    assert "diverged at t =" in capsys.readouterr().err


def test_bad_arguments_exit_code(capsys):
    assert main(["sweep", "x.ini", "--axis", "colour", "--values", "1", "--snapshot", "1"]) == EXIT_INVALID
    assert main([]) == EXIT_INVALID


def test_single_value_sweep_matches_run(write_config, tmp_path):
    path = write_config()
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(path), "--axis", "omega", "--values", "4.0", "--snapshot", "1.0",
                 "--out", str(out), "--workers", "1"]) == EXIT_OK
    header, rows = _read(out)
    assert tuple(header) == SWEEP_COLUMNS
    main(["run", str(path), "--trajectory", str(tmp_path / "solo.csv")])
    solo_header, solo = _read(tmp_path / "solo.csv")
    last = solo[-1]
    assert rows == [[4.0, last[solo_header.index("phi_max")], last[solo_header.index("fatigue_probe")], None]]
    text = out.read_text().splitlines()[1].split(",")
    raw = (tmp_path / "solo.csv").read_text().splitlines()[-1].split(",")
    assert text[1] == raw[1] and text[2] == raw[4] and text[3] == ""


def test_sweep_rows_sorted_and_concurrent(write_config, tmp_path):
    path = write_config()
    for workers in ("1", "2"):
        out = tmp_path / f"s{workers}.csv"
        assert main(["sweep", str(path), "--axis", "amplitude", "--values", "3,1,2", "--snapshot", "0.5",
                     "--out", str(out), "--workers", workers]) == EXIT_OK
    assert (tmp_path / "s1.csv").read_bytes() == (tmp_path / "s2.csv").read_bytes()
    _, rows = _read(tmp_path / "s1.csv")
    assert [r[0] for r in rows] == [1.0, 2.0, 3.0]
    assert rows[0][1] < rows[1][1] < rows[2][1]


def test_sweep_reports_threshold_crossing_time(write_config, tmp_path):
    path = write_config(**{"t_end = 1.0": "t_end = 10.0", "amplitude = 0.6": "amplitude = 2.0"})
    out = tmp_path / "s.csv"
    assert main(["sweep", str(path), "--axis", "rho", "--values", "1", "--snapshot", "10",
                 "--out", str(out)]) == EXIT_OK
    _, rows = _read(out)
    assert rows[0][3] is not None and 0 < rows[0][3] < 10


def test_sweep_partial_output_on_member_failure(write_config, tmp_path, capsys):
    path = write_config()
    out = tmp_path / "s.csv"
    code = main(["sweep", str(path), "--axis", "kappa", "--values", "1,-1,2", "--snapshot", "0.5", "--out", str(out)])
    assert code == EXIT_INVALID
    _, rows = _read(out)
    assert [r[0] for r in rows] == [1.0, 2.0]
    assert "kappa = -1.0" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sweep_divergent_member_exit_code(write_config, tmp_path):
    path = write_config()
    out = tmp_path / "s.csv"
    code = main(["sweep", str(path), "--axis", "amplitude", "--values", "1,1e308", "--snapshot", "0.5", "--out", str(out)])
    assert code == EXIT_DIVERGED
    _, rows = _read(out)
    assert [r[0] for r in rows] == [1.0]


def test_sweep_snapshot_beyond_t_end(write_config):
    assert main(["sweep", str(write_config()), "--axis", "rho", "--values", "1", "--snapshot", "5"]) == EXIT_INVALID


def test_sweep_to_stdout(write_config, capsys):
    assert main(["sweep", str(write_config()), "--axis", "rho", "--values", "2", "--snapshot", "0.5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS) and lines[1].startswith("2.0,")


def test_landscape_files(tmp_path):
    out = tmp_path / "land"
    assert main(["landscape", "--f0", "1.0", "--fatigue", "0,0.5,1.5", "--samples", "1401", "--out", str(out)]) == EXIT_OK
    argmins = []
    for f in (0.0, 0.5, 1.5):
        header, rows = _read(out / landscape_filename(f))
        assert header == ["phi", "energy_density"] and len(rows) == 1401
        phi = np.array([r[0] for r in rows])
        density = np.array([r[1] for r in rows])
        assert phi[0] == -0.2 and phi[-1] == 1.2
        argmins.append(min(max(phi[np.argmin(density)], 0.0), 1.0))
    assert argmins[0] == 0.0
    assert abs(argmins[1] - (2 - math.sqrt(3))) <= 2 / 1401
    assert argmins[2] == 1.0


def test_landscape_two_samples(tmp_path):
    assert main(["landscape", "--f0", "1", "--fatigue", "0", "--samples", "2", "--out", str(tmp_path)]) == EXIT_OK
    _, rows = _read(tmp_path / landscape_filename(0.0))
    assert [r[0] for r in rows] == [-0.2, 1.2]


def test_landscape_errors(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["landscape", "--f0", "1", "--fatigue", "0", "--samples", "5", "--out", str(blocker)]) == EXIT_INVALID
    assert main(["landscape", "--f0", "1", "--fatigue", "0", "--samples", "1", "--out", str(tmp_path)]) == EXIT_INVALID


def test_check_subcommand_prints_one_line_per_criterion(capsys):
    assert main(["check", "--only", "7"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("criterion  7 [PASS] landscape thresholds")
    assert out[-1] == "1/1 criteria passed"


def test_console_entry_point_runs(write_config, tmp_path):
    path = write_config()
    proc = subprocess.run([sys.executable, "-m", "phasefatigue.cli", "run", str(path),
                           "--trajectory", str(tmp_path / "t.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "t.csv").exists()
