import json

import numpy as np
import pytest

from rdhomotopy.cli import (SWEEP_HEADER, ConfigError, dumps, load_config, main,
                            parse_config_text, strip_timing)


def _run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_solve_json(tmp_path):
    code, out = _run(tmp_path, "--mode", "solve", "--n", "100", "--alpha", "1", "--eps", "1e-10")
    assert code == 0
    doc = json.loads(out.read_text())
    sol = doc["solution"]
    assert len(sol["u"]) == 100 and sol["converged"]
    assert sol["residual_inf"] <= 1e-10 * max(1, max(sol["u"]))


def test_solve_csv_solution(tmp_path):
    csv_path = tmp_path / "u.csv"
    code, _ = _run(tmp_path, "--n", "20", "--csv-solution", str(csv_path))
    assert code == 0
    raw = csv_path.read_bytes()
    lines = raw.decode().split("\r\n")
    assert lines[0] == "k,x,u" and lines[-1] == ""
    assert len(lines) == 22
    k, x, u = lines[-2].split(",")
    assert k == "20" and float(x) == 1.0 and float(u) > 0


def test_verify_small_mesh(tmp_path):
    code, out = _run(tmp_path, "--mode", "verify", "--n", "64")
    doc = json.loads(out.read_text())
    assert code == 0 and doc["passed"], [c for c in doc["checks"] if not c["pass"]]


def test_bad_n_is_config_error(tmp_path, capsys):
    code, _ = _run(tmp_path, "--n", "1")
    assert code == 2
    assert "n" in capsys.readouterr().err


def test_unknown_flag_is_config_error():
    assert main(["--bogus"]) == 2


def test_inadmissible_exponents(tmp_path):
    code, _ = _run(tmp_path, "--p", "3", "--q", "2")
    assert code == 2


def test_mesh_below_gate_is_solver_error(tmp_path):
    code, _ = _run(tmp_path, "--n", "10", "--alpha", "1")
    assert code == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a run\nmode = solve\nn = 50  # nodes\nalpha-list = 0.5, 1\neps=1e-9\n")
    c = load_config(["--config", str(cfg), "--n", "70"])
    assert c.n == 70 and c.eps == 1e-9 and c.alpha_list == [0.5, 1.0]


@pytest.mark.parametrize("text,line", [("n = 10\nfoo = 3\n", 2), ("\n\nn = ten\n", 3),
                                       ("mode solve\n", 1)])
def test_config_errors_have_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "run.cfg")
    assert f"run.cfg:{line}:" in str(exc.value)


def test_config_missing_file():
    assert main(["--config", "/nonexistent/run.cfg"]) == 2


def test_oracle_gap(tmp_path):
    code, solved = _run(tmp_path, "--n", "100", "--eps", "1e-10", name="s.json")
    assert code == 0
    code, out = _run(tmp_path, "--mode", "oracle", "--n", "100", "--solve-result", str(solved))
    assert code == 0
    assert json.loads(out.read_text())["oracle_gap"] <= 1e-9


def test_oracle_gap_shape_mismatch(tmp_path):
    _, solved = _run(tmp_path, "--n", "50", name="s.json")
    code, _ = _run(tmp_path, "--mode", "oracle", "--n", "100", "--solve-result", str(solved))
    assert code == 2


def test_sweep_csv_order(tmp_path):
    code, out = _run(tmp_path, "--mode", "sweep", "--format", "csv", "--n-list", "30,60",
                     "--alpha-list", "0.5,1", "--jobs", "2", name="sweep.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == SWEEP_HEADER
    keys = [tuple(ln.split(",")[:2]) for ln in lines[1:]]
    assert keys == [("30", "0.5"), ("30", "1.0"), ("60", "0.5"), ("60", "1.0")]
    gaps = [float(ln.split(",")[SWEEP_HEADER.index("oracle_gap")]) for ln in lines[1:]]
    assert max(gaps) <= 1e-9


def test_plan_mode(tmp_path):
    code, out = _run(tmp_path, "--mode", "plan", "--n", "100", "--alpha", "1")
    doc = json.loads(out.read_text())
    assert code == 0 and doc["mesh_ok"] and doc["bounds"]["n_min"] == 13
    assert doc["plan"]["partition"] == "geometric"


def test_plan_mode_reports_nonfinite_as_strings(tmp_path):
    code, out = _run(tmp_path, "--mode", "plan", "--p", "5", "--q", "2", "--alpha", "5")
    doc = json.loads(out.read_text())
    assert code == 0 and not doc["mesh_ok"]
    assert doc["bounds"]["C2"] == "inf" and doc["bounds"]["u1_lower"] == 0.0
    assert doc["bounds"]["n_min"] == 47068


def test_json_deterministic(tmp_path):
    _, a = _run(tmp_path, "--n", "200", "--alpha", "2", name="a.json")
    _, b = _run(tmp_path, "--n", "200", "--alpha", "2", name="b.json")
    da, db = (strip_timing(json.loads(f.read_text())) for f in (a, b))
    assert dumps(da) == dumps(db)


def test_dumps_nonfinite():
    assert json.loads(dumps({"a": np.inf, "b": [np.nan, 1.0]})) == {"a": "inf", "b": ["nan", 1.0]}
