import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

import bldcsim
from bldcsim.cli import main
from bldcsim.sensing import DelayLut
from bldcsim.trace import read_trace

DB = str(Path(bldcsim.__file__).parent / "data" / "fets.csv")


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("t_end = 0.2\nscenario.kind = startup\n")
    return p


def test_run_writes_outputs(cfg_file, tmp_path, capsys):
    trace, svg = tmp_path / "t.csv", tmp_path / "p.svg"
    rc = main(["run", str(cfg_file), "--trace", str(trace), "--plot", "rpm_true,duty", str(svg),
               "--json"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["scenario"] == "startup"
    assert len(read_trace(trace)) == 2000
    ET.fromstring(svg.read_text())


def test_run_text_summary(cfg_file, capsys):
    assert main(["run", str(cfg_file)]) == 0
    assert "commutations" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [[], ["run"], ["bogus"], ["fets"], ["lut", "build", "--cutoff", "x"]])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_missing_and_invalid_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "none.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("motor.pole_pairs = 0\n")
    assert main(["run", str(bad)]) == 1
    assert "motor.pole_pairs" in capsys.readouterr().err


def test_bad_plot_column(cfg_file, tmp_path, capsys):
    assert main(["run", str(cfg_file), "--plot", "nope", str(tmp_path / "p.svg")]) == 1
    assert "nope" in capsys.readouterr().err


def test_startup_failure_exits_2(tmp_path, capsys):
    p = tmp_path / "stall.cfg"
    p.write_text("scenario.kind = startup\nramp.duty_start = 0\nramp.ramp_time = 0.02\n"
                 "ramp.timeout = 0.02\nt_end = 1\n")
    assert main(["run", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_unwritable_trace_exits_2(cfg_file, tmp_path):
    assert main(["run", str(cfg_file), "--trace", str(tmp_path / "no" / "t.csv")]) == 2


def test_fets_rank(capsys):
    assert main(["fets", "rank", DB]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert rows[0].split()[1] == "PSMN1R2-30YLDX"
    assert len(rows) == 5


def test_fets_rank_no_feasible(capsys):
    assert main(["fets", "rank", DB, "--vgate", "1"]) == 1


def test_fets_runtime(capsys):
    assert main(["fets", "runtime", DB, "--battery", "16,5,0.8", "--load", "300"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("usable energy 64 Wh")
    runtimes = [float(ln.split()[-1]) for ln in out[2:]]
    assert runtimes == sorted(runtimes, reverse=True)


@pytest.mark.parametrize("battery", ["16,5", "16,x,0.8", "16,5,2"])
def test_fets_runtime_bad_battery(battery):
    assert main(["fets", "runtime", DB, "--battery", battery, "--load", "300"]) == 1


def test_fets_missing_db(tmp_path):
    assert main(["fets", "rank", str(tmp_path / "none.csv")]) == 1


def test_lut_build(tmp_path, capsys):
    assert main(["lut", "build", "--cutoff", "100", "--fmin", "5", "--fmax", "2000", "-n", "8"]) == 0
    out = capsys.readouterr().out
    out_file = tmp_path / "lut.csv"
    assert main(["lut", "build", "--cutoff", "100", "--fmin", "5", "--fmax", "2000", "-n", "8",
                 "-o", str(out_file)]) == 0
    assert out_file.read_text() == out
    assert len(DelayLut.from_csv(out_file).entries) == 8


def test_lut_build_invalid_range():
    assert main(["lut", "build", "--cutoff", "100", "--fmin", "50", "--fmax", "5", "-n", "8"]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bldcsim", "fets", "rank", DB],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "PSMN1R2-30YLDX" in res.stdout
