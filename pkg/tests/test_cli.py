import csv
import io
import json
import subprocess
import sys

import pytest

from treeglauber.cli import USAGE, VIOLATION, OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_mix_exact_small(capsys):
    code, out, _ = run(capsys, "mix-exact", "--b", "2", "--H", "1", "--q", "3")
    d = json.loads(out)
    assert code == OK
    assert d["tau"] == 25 and d["omega_size"] == 12 and d["ok"]
    assert d["config"]["b"] == 2 and d["stationary_check"] <= 1e-12


def test_mix_exact_too_large(capsys):
    code, out, err = run(capsys, "mix-exact", "--b", "2", "--H", "3", "--q", "5")
    assert code == USAGE and out == ""
    assert "state space too large" in err


def test_max_omega_env(monkeypatch, capsys):
    monkeypatch.setenv("TREEGLAUBER_MAX_MATRIX", "5")
    code, _, err = run(capsys, "mix-exact", "--b", "2", "--H", "1", "--q", "3")
    assert code == USAGE and "state space too large" in err


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as e:
        main(["congestion", "--b", "2", "--H", "1", "--nope"])
    assert e.value.code == USAGE


def test_missing_command(capsys):
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == USAGE


def test_path_json(capsys):
    code, out, _ = run(capsys, "path", "--b", "2", "--H", "1", "--q", "3",
                       "--x", "[0,1,2]", "--y", "[1,0,2]")
    d = json.loads(out)
    assert code == OK and d["ok"]
    assert d["length"] == len(d["moves"]) <= d["length_bound"] == 5
    x = [0, 1, 2]
    for v, c in d["moves"]:
        x[v] = c
    assert x == [1, 0, 2]


@pytest.mark.parametrize("bad", ["[0,0,1]", "[0,1]", "not json", "[0,1,7]"])
def test_path_rejects_bad_colouring(capsys, bad):
    code, _, err = run(capsys, "path", "--b", "2", "--H", "1", "--q", "3",
                       "--x", bad, "--y", "[1,0,2]")
    assert code == USAGE and err.startswith("error:")


def test_congestion_json(capsys):
    code, out, _ = run(capsys, "congestion", "--b", "2", "--H", "1", "--q", "3")
    d = json.loads(out)
    assert code == OK
    assert d["A_f"] == 36.0 and d["max_load"] == 48 and d["paths"] == 132
    assert d["cycle_plus_max_consistent"] <= d["s_bound"] == 4


def test_congestion_budget(capsys):
    code, _, err = run(capsys, "congestion", "--b", "2", "--H", "1", "--q", "3",
                       "--path-budget", "10")
    assert code == USAGE and "budget" in err


def test_conductance_exact_json(capsys):
    code, out, err = run(capsys, "conductance", "--b", "2", "--H", "1", "--q", "3")
    d = json.loads(out)
    assert code == OK
    assert d["exact"] == ["1/6", "2/27", "4/15"]
    assert d["regime_ok"] is False and "warning" in err


def test_conductance_degenerate(capsys):
    code, _, err = run(capsys, "conductance", "--b", "2", "--H", "1", "--q", "4")
    assert code == USAGE and "error: degenerate cut" in err


def test_conductance_mc_json(capsys):
    code, out, _ = run(capsys, "conductance", "--b", "2", "--H", "1", "--q", "3",
                       "--mode", "mc", "--trials", "2000", "--seed", "3")
    d = json.loads(out)
    assert code == OK and d["mode"] == "monte-carlo"
    assert abs(d["phi_S"] - 4 / 15) <= 4 * d["stderr"] + 1e-12


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--b", "2", "--H", "1", "--q", "3",
                       "--steps", "200", "--seed", "1", "--x", "[0,1,2]")
    assert code == OK
    lines = out.splitlines()
    assert lines[0].startswith("# config:") and lines[1] == "# start: [0, 1, 2]"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[2:]))))
    assert rows
    x = [0, 1, 2]
    last = 0
    for r in rows:
        t, v, c = int(r["step"]), int(r["changed_vertex"]), int(r["new_colour"])
        assert last < t <= 200
        last = t
        x[v] = c
        assert x[0] != x[1] and x[0] != x[2]


def test_forced_stats_csv(capsys):
    code, out, err = run(capsys, "forced-stats", "--b", "6", "--q", "3", "--h-max", "3",
                         "--trials", "500", "--seed", "2")
    assert code == OK and "warning" in err
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert [int(r["h"]) for r in rows] == [0, 1, 2, 3]
    for r in rows:
        assert 0.0 <= float(r["u_mc"]) <= 1.0
        assert float(r["bound_1_over_b"]) == pytest.approx(1 / 6)


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--b", "20", "--q", "3", "--H", "3")
    reps = json.loads(out)
    assert code == OK
    names = {r["name"] for r in reps}
    assert "2q <= b/ln(b)" in names and "lambda(h) <= (h+1) b^(h+1)" in names
    assert all(r["holds"] for r in reps)


def test_bounds_n_and_mismatch(capsys):
    code, out, _ = run(capsys, "bounds", "--b", "2", "--n", "7")
    assert code == OK and json.loads(out)
    code, _, _ = run(capsys, "bounds", "--b", "2", "--n", "8")
    assert code == USAGE
    code, _, _ = run(capsys, "bounds", "--b", "2")
    assert code == USAGE


def test_bounds_large_parameters(capsys):
    code, out, _ = run(capsys, "bounds", "--b", "64", "--q", "16", "--H", "10")
    assert code == OK and json.loads(out)


def test_verify_all_warns_outside_regime(capsys):
    code, out, err = run(capsys, "verify-all", "--b", "6", "--H", "1", "--q", "3",
                         "--seed", "1", "--trials", "2000")
    d = json.loads(out)
    assert code == OK and d["ok"] and not d["regime_ok"]
    assert "warning" in err and d["warnings"]


def test_verify_all_out_file(tmp_path, capsys):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify-all", "--b", "2", "--H", "1", "--q", "3",
                       "--seed", "7", "--trials", "1000", "--out", str(target))
    assert code == OK and out == ""
    assert json.loads(target.read_text())["ok"]


def test_exit_code_on_violation(monkeypatch, capsys):
    import treeglauber.cli as cli
    monkeypatch.setattr(cli.bounds, "upper_mixing_bound", lambda b, q, n: 1.0)
    code, out, _ = run(capsys, "mix-exact", "--b", "2", "--H", "1", "--q", "3")
    assert code == VIOLATION and json.loads(out)["ok"] is False


def test_module_entry_point_deterministic():
    cmd = [sys.executable, "-m", "treeglauber", "verify-all", "--b", "2", "--H", "1",
           "--q", "3", "--seed", "7", "--trials", "1000"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    assert a.stdout == b.stdout and a.stdout
