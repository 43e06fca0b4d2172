from __future__ import annotations

import subprocess
import sys

import pytest

from causalgeom.cli import main
from causalgeom.io import read_csv, read_meta


def test_enumerate_counts(capsys, tmp_path):
    assert main(["enumerate", "--states", "2", "--alphabet", "2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "total = 64" in out and "top_dimensional = 16" in out and "strongly_connected = 25" in out
    header, rows = read_csv(tmp_path / "types.csv")
    assert header[0] == "code" and len(rows) == 64
    meta = read_meta(tmp_path / "run.meta")
    assert meta["subcommand"] == "enumerate" and "output.types.csv" in meta


def test_enumerate_cap_is_an_error(capsys):
    assert main(["enumerate", "--states", "3", "--alphabet", "3", "--cap", "100"]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_machine_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.machine"
    bad.write_text("states = 1\nalphabet = a, b\ngamma = 0 a -> 0, 0 b -> 0\nprobs = 0 a = 0.5, 0 b = 0.6\n")
    assert main(["geodesic", "--machine", str(bad), "--target", "one-state-binary"]) == 2
    assert "row 0" in capsys.readouterr().err
    assert main(["flow", "--machine", "no-such-name", "--target", "one-state-ternary"]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["validate", "nonsense"])
    assert exc.value.code == 2


def test_flow_writes_curve_and_manifest(tmp_path, capsys):
    code = main(["flow", "--machine", "fig2-start", "--target", "one-state-ternary", "--out", str(tmp_path)])
    assert code == 0
    assert "termination = rest" in capsys.readouterr().out
    meta = read_meta(tmp_path / "run.meta")
    assert {"output.flow.csv", "output.flow.meta", "input.fig2-start", "input.one-state-ternary"} <= set(meta)
    assert meta["seed"] == "20240601"


def test_replay_reproduces_outputs(tmp_path, capsys):
    args = ["simulate", "--machine", "fig2-start", "--target", "one-state-ternary", "--L", "200",
            "--generations", "5", "--seed", "11", "--out", str(tmp_path / "a")]
    assert main(args) == 0
    assert main(["replay", str(tmp_path / "a" / "run.meta"), "--out", str(tmp_path / "b")]) == 0
    assert "identical" in capsys.readouterr().out
    a, b = read_meta(tmp_path / "a" / "run.meta"), read_meta(tmp_path / "b" / "run.meta")
    assert a["output.chain.csv"] == b["output.chain.csv"]


def test_validate_ldp_passes(tmp_path, capsys):
    assert main(["validate", "ldp", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("ldp: PASS")
    assert read_meta(tmp_path / "report.meta")["passed"] == "1"


def test_validate_failure_exit_code(capsys):
    # a tiny CLT run cannot meet the covariance tolerance
    assert main(["validate", "clt", "--L", "60", "--samples", "200", "--L-ref", "0", "--seed", "1"]) == 1


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "causalgeom.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
