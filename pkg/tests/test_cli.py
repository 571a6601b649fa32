import json

import pytest

from scar.cli import main
from scar.graph import serialize_graph, cycle_graph


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_reproduce_example_default(capsys):
    code, out, _ = run_cli(capsys, "reproduce-example")
    assert code == 0
    assert "C1   | 6  5  5  5  4  4" in out
    assert "capture at turn 13 by C1" in out
    assert "deviation profitable; threshold criterion agrees: PASS" in out


def test_reproduce_example_low_gamma(capsys):
    code, out, _ = run_cli(capsys, "reproduce-example", "--gamma", "0.8")
    assert code == 0
    assert "deviation not profitable" in out


def test_solve_json_report(capsys):
    code, out, _ = run_cli(capsys, "solve", "--builtin", "path:3", "--n", "2",
                           "--gamma", "0.5", "--epsilon", "0.5", "--s0", "1,3,1")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["scenario"]["n_players"] == 2
    assert doc["scenario"]["tol"] == 1e-10  # defaults echoed
    assert doc["result"]["values_at_s0"][0] == pytest.approx(0.125)
    assert doc["result"]["capture_time"] == 3
    assert doc["result"]["verification"]["is_ne"]


def test_solve_validation_exit_code(capsys):
    code, _, err = run_cli(capsys, "solve", "--builtin", "path:3", "--n", "2",
                           "--gamma", "1.0", "--epsilon", "0.5")
    assert code == 2
    assert "gamma" in err


def test_capacity_exit_code(capsys):
    code, _, err = run_cli(capsys, "solve", "--builtin", "petersen", "--n", "3",
                           "--gamma", "0.5", "--epsilon", "0.25", "--state-cap", "100")
    assert code == 3
    assert "cap" in err


def test_s0_in_capture_state(capsys):
    code, out, _ = run_cli(capsys, "solve", "--builtin", "path:3", "--n", "2",
                           "--gamma", "0.5", "--epsilon", "0.5", "--s0", "2,2,1")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["capture_time"] == 0
    assert doc["result"]["values_at_s0"] == [1.0, -1.0]


def test_copnumber_commands(capsys):
    code, out, _ = run_cli(capsys, "copnumber", "--builtin", "cycle:4")
    assert code == 0
    assert json.loads(out)["result"]["cop_number"] == 2
    code, out, _ = run_cli(capsys, "copnumber", "--builtin", "path:4", "--selfish")
    assert code == 0
    assert json.loads(out)["result"]["selfish_cop_number"] == 1


def test_sweep_csv_output(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--builtin", "cycle:4", "--n", "3",
                           "--gamma", "0.2", "--epsilon", "0.5",
                           "--grid", "0.2;0.5", "--s0", "1,1,3,1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("gamma,epsilon,s0,")
    assert lines[1].startswith("0.2,0.5,\"1,1,3,1\"") or lines[1].startswith('0.2,0.5,"1,1,3,1"')


def test_verify_profiles(capsys):
    code, out, _ = run_cli(capsys, "verify", "--builtin", "cycle:4", "--n", "3",
                           "--gamma", "0.2", "--epsilon", "0.5", "--profile", "cr-optimal")
    assert code == 0
    assert json.loads(out)["result"]["is_ne"]
    code, out, _ = run_cli(capsys, "verify", "--builtin", "cycle:5", "--n", "3",
                           "--gamma", "0.7", "--epsilon", "0.3", "--profile", "capturing-threat")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["is_ne"] and doc["result"]["captures_everywhere"]
    code, out, _ = run_cli(capsys, "verify", "--builtin", "cycle:4", "--n", "3",
                           "--gamma", "0.5", "--epsilon", "0.25", "--profile", "noncapturing")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["is_ne"] and doc["result"]["termination"] == "cycle"


def test_reproduce_example_json(capsys):
    code, out, _ = run_cli(capsys, "reproduce-example", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["cooperative"]["capture_time"] == 5
    assert doc["result"]["deviation"]["capture_time"] == 13
    assert doc["result"]["deviation"]["symbolic"][0] == "(1-eps)*gamma^13"


def test_plan_requires_deviator(capsys):
    code, _, err = run_cli(capsys, "simulate", "--builtin", "path:3", "--n", "2",
                           "--gamma", "0.5", "--epsilon", "0.5", "--s0", "1,3,1",
                           "--profile", "cr-optimal", "--plan", "1:2")
    assert code == 2
    assert "deviator" in err


def test_simulate_with_plan_table(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--builtin", "delayed-capture", "--n", "3",
                           "--gamma", "0.9", "--epsilon", "0.25", "--s0", "6,1,4,1",
                           "--profile", "cr-optimal", "--table")
    assert code == 0
    assert out.startswith("Turn |")
    assert "capture at turn" in out


def test_simulate_json(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--builtin", "path:3", "--n", "2",
                           "--gamma", "0.5", "--epsilon", "0.5", "--s0", "1,3,1",
                           "--profile", "cr-optimal")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["capture_time"] == 3
    assert doc["result"]["trace"][0]["state"] == [1, 3, 1]


def test_theorems_exit_zero_on_pass(capsys):
    code, out, _ = run_cli(capsys, "theorems", "--builtin", "cycle:4", "--n", "3",
                           "--gamma", "0.5", "--epsilon", "0.25", "--grid", "0.3,0.9;0.0,0.5")
    assert code == 0
    doc = json.loads(out)
    assert all(r["passed"] for r in doc["result"]["reports"])


def test_scenario_file(tmp_path, capsys):
    scenario = {
        "graph": {"edge_list": serialize_graph(cycle_graph(4))},
        "n_players": 3,
        "gamma": 0.2,
        "epsilon": 0.5,
        "s0": [1, 2, 3, 1],
        "tolerances": {"value": 1e-10, "ne_gap": 1e-8},
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    code, out, _ = run_cli(capsys, "solve", "--scenario", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["scenario"]["s0"] == [1, 2, 3, 1]
    assert doc["scenario"]["in_omega_tilde"] is True


NONCONVERGENT_GRAPH = "6 6\n1 2\n1 4\n1 5\n2 5\n3 6\n5 6\n"


def test_solve_threat_fallback(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text(NONCONVERGENT_GRAPH)
    code, out, _ = run_cli(capsys, "solve", "--graph", str(path), "--n", "3",
                           "--gamma", "0.7727", "--epsilon", "0.1326", "--s0", "1,2,3,1")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["method"] == "threat-fallback"
    assert doc["result"]["verification"]["is_ne"]


def test_solve_no_fallback_exit_code(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text(NONCONVERGENT_GRAPH)
    code, _, err = run_cli(capsys, "solve", "--graph", str(path), "--n", "3",
                           "--gamma", "0.7727", "--epsilon", "0.1326",
                           "--s0", "1,2,3,1", "--no-fallback")
    assert code == 4
    assert "sweeps" in err or "stable" in err


def test_equivalence_battery(capsys):
    code, out, _ = run_cli(capsys, "equivalence", "--builtin", "cycle:4", "--n", "3",
                           "--trials", "10", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["all_sums_exact"] and doc["result"]["cr_optimal_is_ne"]
    assert doc["seed"] == 3


def test_missing_graph_is_validation_error(capsys):
    code, _, err = run_cli(capsys, "solve", "--n", "2", "--gamma", "0.5", "--epsilon", "0.5")
    assert code == 2
    assert "graph" in err


def test_reports_are_byte_identical_across_runs(capsys):
    argv = ["solve", "--builtin", "cycle:4", "--n", "3", "--gamma", "0.2",
            "--epsilon", "0.5", "--s0", "1,2,3,1"]
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second
    argv = ["sweep", "--builtin", "cycle:4", "--n", "3", "--gamma", "0.2",
            "--epsilon", "0.5", "--grid", "0.2,0.9;0.25"]
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second


def test_verify_positional_ne_nonconvergent_exit(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text(NONCONVERGENT_GRAPH)
    code, _, err = run_cli(capsys, "verify", "--graph", str(path), "--n", "3",
                           "--gamma", "0.7727", "--epsilon", "0.1326",
                           "--profile", "positional-ne")
    assert code == 4
