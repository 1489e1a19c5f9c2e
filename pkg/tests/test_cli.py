import json

import numpy as np
import pytest

from coordlab.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, main
from coordlab.dsbs import dsbs_joint
from coordlab.prob import JointTable, markov_chain_joint, save_table
from coordlab.scheme import SchemeSpec, case5_scheme_spec


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, table in [
        ("qxz", dsbs_joint(0.1)),
        ("qxy", dsbs_joint(0.26)),
        ("diag", JointTable(np.diag([0.5, 0.5]))),
        ("ind", JointTable(np.full((2, 2), 0.25))),
    ]:
        paths[name] = tmp_path / f"{name}.json"
        save_table(table, paths[name])
    paths["case5"] = tmp_path / "case5.json"
    paths["case5"].write_text(json.dumps(case5_scheme_spec().to_json()))
    triv = markov_chain_joint(dsbs_joint(0.1), np.ones((2, 1)), [[0.3, 0.7]])
    paths["triv"] = tmp_path / "triv.json"
    paths["triv"].write_text(json.dumps(SchemeSpec(triv, 0.5, 0.5).to_json()))
    return paths


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_feasible_exit_codes(files, capsys):
    code, out, _ = run(["feasible", "--qxz", files["qxz"], "--qxy", files["qxy"]], capsys)
    assert code == EXIT_OK
    res = json.loads(out)
    assert res["feasible"] and res["residual"] <= 1e-9
    assert np.allclose(res["witness"]["probs"], [0.8, 0.2, 0.2, 0.8], atol=1e-6)

    code, _, _ = run(["feasible", "--qxz", files["diag"], "--qxy", files["diag"]], capsys)
    assert code == EXIT_OK
    code, out, _ = run(["feasible", "--qxz", files["ind"], "--qxy", files["qxy"]], capsys)
    assert code == EXIT_INFEASIBLE and json.loads(out)["feasible"] is False


def test_malformed_inputs_name_the_field(files, tmp_path, capsys):
    code, _, err = run(["feasible", "--qxz", tmp_path / "nope.json", "--qxy", files["qxy"]], capsys)
    assert code == EXIT_ERROR and "--qxz" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"probs": [0.5, 0.5]}))
    code, _, err = run(["feasible", "--qxz", files["qxz"], "--qxy", bad], capsys)
    assert code == EXIT_ERROR and "--qxy" in err and "axes" in err
    spec = json.loads(files["case5"].read_text())
    del spec["rc"]
    bad.write_text(json.dumps(spec))
    code, _, err = run(["audit", "--spec", bad], capsys)
    assert code == EXIT_ERROR and "'rc'" in err
    code, _, err = run(["gap", "--theta", "0.6", "--tau", "0.1"], capsys)
    assert code == EXIT_ERROR and "theta" in err
    code, _, _ = run(["bogus"], capsys)
    assert code == EXIT_ERROR


def test_gap_and_figure4(capsys):
    code, out, _ = run(["gap", "--theta", "0.2", "--tau", "0.1"], capsys)
    assert code == EXIT_OK
    assert out.splitlines() == ["theta,tau,gap_bits", "0.200000,0.100000,0.088979"]
    code, out, _ = run(["figure4", "--steps", "3", "--theta-min", "0.1", "--theta-max", "0.3"], capsys)
    lines = out.splitlines()
    assert code == EXIT_OK and len(lines) == 10
    assert lines[1].startswith("0.100000,0.010000,")
    code, _, _ = run(["figure4", "--steps", "3", "--theta-min", "0.0"], capsys)
    assert code == EXIT_ERROR


def test_region_rows_and_gap(files, tmp_path, capsys):
    out_path = tmp_path / "region.csv"
    argv = ["region", "--qxz", files["qxz"], "--qxy", files["qxy"], "--rc-grid", "0", "--starts", "8", "--out", out_path]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0] == "rc,r_rcs,r_dcs,residual_rcs,residual_dcs" and len(lines) == 2
    _, r_rcs, r_dcs, _, _ = map(float, lines[1].split(","))
    assert r_dcs - r_rcs >= 0.05
    code, _, err = run(["region", "--qxz", files["ind"], "--qxy", files["qxy"]], capsys)
    assert code == EXIT_ERROR and err.startswith("error:")


def test_config_file_wins(files, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": 0.2, "tau": 0.1}))
    code, out, _ = run(["gap", "--theta", "0.3", "--tau", "0.3", "--config", cfg], capsys)
    assert code == EXIT_OK and "0.200000,0.100000" in out
    # relative paths resolve against the config's directory
    cfg.write_text(json.dumps({"qxz": "qxz.json", "qxy": "qxy.json"}))
    code, _, _ = run(["feasible", "--config", cfg], capsys)
    assert code == EXIT_OK
    cfg.write_text(json.dumps({"thetta": 0.2}))
    code, _, err = run(["gap", "--config", cfg], capsys)
    assert code == EXIT_ERROR and "thetta" in err


def test_simulate_and_audit(files, tmp_path, capsys):
    summary = tmp_path / "summary.json"
    argv = ["simulate", "--spec", files["triv"], "--n-list", "1,2", "--trials", "3", "--summary", summary]
    code, out, _ = run(argv, capsys)
    assert code == EXIT_OK
    rows = [line.split(",") for line in out.splitlines()[1:]]
    # |W| = 1: every seed gives the same product-distribution distance
    for row in rows:
        assert len(set(row[1:4])) == 1
    s = json.loads(summary.read_text())
    assert s["rows"] == 2 and s["truncated"] is False and s["audit_n"] == 2
    code, out, _ = run(["audit", "--spec", files["case5"], "--n", "3", "--seed", "4"], capsys)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["chain_ok"] and sorted(rep) == list(rep)


def test_simulate_truncates_on_budget(files, monkeypatch, capsys):
    monkeypatch.setenv("COORDLAB_BUDGET_CELLS", "2000")
    code, out, err = run(["simulate", "--spec", files["case5"], "--n-list", "2,4,6", "--trials", "2"], capsys)
    assert code == EXIT_OK
    assert "# truncated at n=" in out and "warning" in err


def _runs(argv, capsys, threads_flag=True):
    outs = []
    for threads in (1, 8, 1):
        extra = ["--threads", threads] if threads_flag else []
        code, out, _ = run(argv + extra, capsys)
        assert code == EXIT_OK
        outs.append(out.encode())
    return outs


def test_byte_identical_across_runs_and_threads(files, capsys):
    region = ["region", "--qxz", files["qxz"], "--qxy", files["qxy"], "--rc-grid", "0,0.25", "--starts", "8"]
    a, b, c = _runs(region, capsys)
    assert a == b == c
    sim = ["simulate", "--spec", files["case5"], "--n-list", "2,3", "--trials", "4", "--seed", "5"]
    a, b, c = _runs(sim, capsys)
    assert a == b == c
