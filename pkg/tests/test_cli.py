"""Command-line harness: CSV contract, determinism, sweep table,
verification report, figure rendering."""

import json
import subprocess
import sys

import numpy as np
import pytest

import netefg as ng
from netefg.cli import CSV_COLUMNS, SWEEP_COLUMNS, main
from netefg.gamefile import dump


def _read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def _mp_run_args(tmp_path, *extra):
    out = tmp_path / "run.csv"
    args = ["run", "--game", "matching-pennies", "--nodes", "2",
            "--eta", "0.05", "--iterations", "60", "--record-every", "10",
            "--output", str(out)]
    return args + list(extra), out


def test_run_csv_schema_and_cadence(tmp_path, capsys):
    args, out = _mp_run_args(tmp_path)
    assert main(args) == 0
    header, rows = _read_csv(out)
    assert header == list(CSV_COLUMNS)
    assert [r[0] for r in rows] == ["10", "20", "30", "40", "50", "60"]
    for r in rows:
        assert float(r[1]) >= -1e-9   # nash_gap_avg present and sane
        assert float(r[4]) >= 0.0     # dist2_ne computed at every record
    summary = capsys.readouterr().out
    assert "summary: eta=0.05 t=60" in summary


def test_run_defaults_to_stdout(capsys):
    rc = main(["run", "--game", "matching-pennies", "--nodes", "2",
               "--eta", "0.1", "--iterations", "20", "--record-every", "10",
               "--metrics", "nash_gap"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("10,")
    assert lines[-1].startswith("summary:")


def test_run_byte_deterministic(tmp_path):
    args1, out1 = _mp_run_args(tmp_path)
    main(args1)
    first = out1.read_bytes()
    args2, out2 = _mp_run_args(tmp_path)
    main(args2)
    assert out2.read_bytes() == first
    # a different seed with random init changes the bytes
    args3 = ["run", "--game", "matching-pennies", "--nodes", "2",
             "--eta", "0.05", "--iterations", "60", "--record-every", "10",
             "--init", "random", "--seed", "5", "--output", str(tmp_path / "b.csv")]
    main(args3)
    assert (tmp_path / "b.csv").read_bytes() != first


def test_run_metrics_subset_blanks_other_columns(tmp_path):
    args, out = _mp_run_args(tmp_path, "--metrics", "nash_gap,symmetric_gap")
    assert main(args) == 0
    header, rows = _read_csv(out)
    for r in rows:
        assert r[1] != "" and r[2] != "" and r[3] != ""
        assert r[4] == "" and r[5] == "" and r[6] == ""


def test_run_xi_column_needs_consecutive_records(tmp_path):
    # xi couples x^t to the successor auxiliary iterate, so it exists only
    # when records are one step apart; at the final record it never does
    args = ["run", "--game", "matching-pennies", "--nodes", "2",
            "--eta", "0.05", "--iterations", "12", "--record-every", "1",
            "--metrics", "lyapunov", "--output", str(tmp_path / "x.csv")]
    assert main(args) == 0
    _, rows = _read_csv(tmp_path / "x.csv")
    assert all(r[6] != "" for r in rows[:-1])
    assert rows[-1][6] == ""
    # at a sparse cadence the column is empty throughout
    args2, out2 = _mp_run_args(tmp_path, "--metrics", "lyapunov")
    main(args2)
    _, rows2 = _read_csv(out2)
    assert all(r[6] == "" for r in rows2)
    assert all(r[5] != "" for r in rows2)  # theta needs no successor


def test_flag_validation_exits_with_usage_error(tmp_path):
    for bad in (["run", "--iterations", "0"],
                ["run", "--eta", "-1"],
                ["run", "--eta", "nope"],
                ["run", "--record-every", "0"],
                ["run", "--metrics", "entropy"],
                ["run", "--init", "corner"]):
        with pytest.raises(SystemExit) as err:
            main(bad)
        assert err.value.code == 2


def test_unknown_fixture_name_is_an_error():
    with pytest.raises(SystemExit, match="unknown fixture"):
        main(["run", "--game", "chess", "--iterations", "5"])


def test_run_from_game_file(tmp_path, capsys):
    path = tmp_path / "net.json"
    dump(ng.network_of("ring", 2, ng.kuhn_poker()), path)
    rc = main(["run", "--game", str(path), "--eta", "0.1", "--iterations", "30",
               "--record-every", "10", "--metrics", "nash_gap",
               "--output", str(tmp_path / "k.csv")])
    assert rc == 0
    header, rows = _read_csv(tmp_path / "k.csv")
    assert len(rows) == 3


def test_run_rejects_non_zero_sum_game_file(tmp_path, capsys):
    doc = {
        "agents": [0, 1],
        "edges": [{"u": 0, "v": 1, "game": "g"}],
        "games": {"g": {"root": 0, "nodes": [
            {"owner": "player1", "infoset": "a0:s",
             "actions": [{"name": "l", "child": 1}, {"name": "r", "child": 2}]},
            {"owner": "terminal", "payoffs": [1.0, 1.0]},
            {"owner": "terminal", "payoffs": [-1.0, 1.0]},
        ]}},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rc = main(["run", "--game", str(path), "--eta", "0.1", "--iterations", "5"])
    assert rc == 1
    assert "zero-sum" in capsys.readouterr().err


def test_verify_passes_on_kuhn_ring(capsys):
    rc = main(["verify", "--game", "kuhn", "--nodes", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "FAIL" not in out
    assert "perfect recall" in out
    assert "consistency of agent 2" in out
    assert "zero-sum" in out
    assert "restricted antisymmetry" in out


def test_verify_fails_on_structural_break(tmp_path, capsys):
    doc = {
        "agents": [0, 1],
        "edges": [{"u": 0, "v": 1, "game": "g"}],
        "games": {"g": {"root": 0, "nodes": [
            {"owner": "player1", "infoset": "a0:s",
             "actions": [{"name": "l", "child": 0}, {"name": "r", "child": 1}]},
            {"owner": "terminal", "payoffs": [0.0, 0.0]},
        ]}},
    }
    path = tmp_path / "cyclic.json"
    path.write_text(json.dumps(doc))
    rc = main(["verify", "--game", str(path)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out and "verification stopped" in out


def test_verify_reports_zero_sum_failure(tmp_path, capsys):
    doc = {
        "agents": [0, 1],
        "edges": [{"u": 0, "v": 1, "game": "g"}],
        "games": {"g": {"root": 0, "nodes": [
            {"owner": "player1", "infoset": "a0:s",
             "actions": [{"name": "l", "child": 1}, {"name": "r", "child": 2}]},
            {"owner": "terminal", "payoffs": [1.0, 1.0]},
            {"owner": "terminal", "payoffs": [-1.0, 1.0]},
        ]}},
    }
    path = tmp_path / "notzs.json"
    path.write_text(json.dumps(doc))
    rc = main(["verify", "--game", str(path)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL zero-sum" in out


def test_verify_rejects_malformed_file(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text("{oops")
    rc = main(["verify", "--game", str(path)])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_sweep_explicit_grid_marks_best(tmp_path, capsys):
    rc = main(["sweep", "--game", "matching-pennies", "--nodes", "2",
               "--init", "random", "--seed", "2",
               "--etas", "0.005,0.03125", "--iterations", "400",
               "--record-every", "20", "--output", str(tmp_path / "sweep.csv")])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [line for line in out.splitlines() if line.strip()]
    assert lines[0].split()[:2] == ["eta", "status"]
    starred = [line for line in lines[1:] if line.rstrip().endswith("*")]
    assert len(starred) == 1
    assert starred[0].startswith("0.03125")  # larger eta contracts faster
    header, rows = _read_csv(tmp_path / "sweep.csv")
    assert header == list(SWEEP_COLUMNS)
    assert len(rows) == 2


def test_sweep_failed_cell_is_not_fatal(capsys):
    rc = main(["sweep", "--game", "matching-pennies", "--nodes", "2",
               "--etas=-1,0.05", "--iterations", "60", "--record-every", "10"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "failed: eta must be positive" in out
    assert out.count("ok") >= 1


def test_sweep_exits_nonzero_when_every_cell_fails(capsys):
    rc = main(["sweep", "--game", "matching-pennies", "--nodes", "2",
               "--etas=-1,-2", "--iterations", "10"])
    assert rc == 1


def test_sweep_default_grid_has_seven_points(capsys):
    rc = main(["sweep", "--game", "matching-pennies", "--nodes", "2",
               "--iterations", "40", "--record-every", "10",
               "--metrics", "nash_gap"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [line for line in out.splitlines() if line.strip()]
    assert len(lines) == 1 + 7
    base = 0.03125  # 1 / (8 ||R||^2) with ||R|| = 2
    etas = sorted(float(line.split()[0]) for line in lines[1:])
    assert etas == pytest.approx([base * 2.0 ** k for k in range(-3, 4)])


def test_sweep_parallel_matches_serial(tmp_path):
    common = ["--game", "matching-pennies", "--nodes", "2",
              "--etas", "0.02,0.04", "--iterations", "50", "--record-every", "10"]
    main(["sweep", *common, "--output", str(tmp_path / "serial.csv")])
    main(["sweep", *common, "--workers", "2", "--output", str(tmp_path / "par.csv")])
    assert (tmp_path / "serial.csv").read_text() == (tmp_path / "par.csv").read_text()


def test_plot_renders_png(tmp_path, capsys):
    args, out = _mp_run_args(tmp_path)
    main(args)
    png = tmp_path / "fig.png"
    rc = main(["plot", "--input", str(out), "--output", str(png)])
    assert rc == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rc = main(["plot", "--input", str(out)])
    assert rc == 0
    assert out.with_suffix(".png").exists()


def test_plot_missing_input(tmp_path, capsys):
    rc = main(["plot", "--input", str(tmp_path / "nope.csv")])
    assert rc == 1
    assert "no such file" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "cli.csv"
    proc = subprocess.run(
        ["netefg", "run", "--game", "matching-pennies", "--nodes", "2",
         "--eta", "0.1", "--iterations", "20", "--record-every", "10",
         "--metrics", "nash_gap", "--output", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert proc.stdout.startswith("summary:")
