import csv
import json

import pytest

from main import main

EXAMPLE_EDGES = "c e 8\na d 5\nf h 4\na c 3\na b 2\nb f 2\nd g 2\ne h 2\ng h 1\n"


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "example.txt"
    path.write_text(EXAMPLE_EDGES, encoding="utf-8")
    return str(path)


@pytest.fixture
def edge_file(tmp_path):
    path = tmp_path / "edge.txt"
    path.write_text("a b 2\n", encoding="utf-8")
    return str(path)


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    envelope = json.loads(capsys.readouterr().out)
    assert envelope["exit_code"] == code
    assert (envelope["status"] == "ok") == (code == 0)
    return code, envelope["payload"]


def test_path_text_report(capsys, example_file):
    assert main(["path", example_file, "--source", "a", "--target", "h", "--decisions"]) == 0
    out = capsys.readouterr().out
    assert "a-d-g-h (utility 8)" in out
    assert "a-c-e-h (utility 13)" in out
    assert "gap:           5" in out
    assert "requires-dp-on-instance" in out
    assert "OPPCOST" in out


def test_path_json_matches_text(capsys, example_file):
    code, payload = run_json(capsys, ["path", example_file, "--source", "a", "--target", "h"])
    assert code == 0
    assert payload["greedy_solution_utility"] == 8
    assert payload["optimal_solution_utility"] == 13
    assert payload["utility_gap"] == 5
    assert payload["verdict"] == "requires-dp-on-instance"
    assert {d["choice"]: d["opportunity_cost"] for d in payload["decisions"]} == {"a-b": 13, "a-c": 8, "a-d": 13}


def test_path_single_edge(capsys, edge_file):
    code, payload = run_json(capsys, ["path", edge_file, "--source", "a", "--target", "b"])
    assert code == 0
    assert payload["utility_gap"] == 0
    assert payload["verdict"] == "greedy-amenable-on-instance"


def test_path_missing_file(capsys, tmp_path):
    code, payload = run_json(capsys, ["path", str(tmp_path / "nope.txt"), "--source", "a", "--target", "b"])
    assert code == 2
    assert payload["error"]["type"] == "FileNotFoundError"


def test_path_parse_error(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("a a 3\n", encoding="utf-8")
    code, payload = run_json(capsys, ["path", str(path), "--source", "a", "--target", "a"])
    assert code == 2
    assert "self-loop" in payload["error"]["message"]


def test_path_without_route(capsys, tmp_path):
    path = tmp_path / "split.txt"
    path.write_text("a b 1\nc d 1\n", encoding="utf-8")
    code, _ = run_json(capsys, ["path", str(path), "--source", "a", "--target", "d"])
    assert code == 3


def test_mst_trace(capsys, example_file):
    assert main(["mst", example_file, "--trace"]) == 0
    out = capsys.readouterr().out
    costs = [line.split("=")[1].strip() for line in out.splitlines() if line.strip().startswith("OPPCOST(")]
    assert costs[:3] == ["5", "8", "8"]
    assert "total weight: 26" in out


def test_mst_verify(capsys, example_file):
    assert main(["mst", example_file, "--verify"]) == 0
    out = capsys.readouterr().out
    assert "oracle match: yes, total 26" in out

    code, payload = run_json(capsys, ["mst", example_file, "--verify"])
    assert code == 0
    assert payload["verification"]["oracle_match"] is True
    assert payload["verification"]["greedy_min_oppcost"]["passed"] is True
    assert payload["tree"]["total_weight"] == 26


def test_mst_tree_input_is_echoed(capsys, tmp_path):
    path = tmp_path / "tree.txt"
    path.write_text("a b 1\nb c 2\n", encoding="utf-8")
    code, payload = run_json(capsys, ["mst", str(path)])
    assert code == 0
    assert {(e["u"], e["v"]) for e in payload["tree"]["edges"]} == {("a", "b"), ("b", "c")}


def test_mst_disconnected(capsys, tmp_path):
    path = tmp_path / "split.txt"
    path.write_text("a b 1\nc d 1\n", encoding="utf-8")
    code, payload = run_json(capsys, ["mst", str(path)])
    assert code == 3
    assert payload["error"]["type"] == "DisconnectedGraphError"


def test_mst_example_flag(capsys):
    code, payload = run_json(capsys, ["mst", "--example"])
    assert code == 0
    assert payload["ordering"][0] == "c-e:8"


def test_producer_operates(capsys):
    code, payload = run_json(capsys, ["producer", "--prices", "100,100", "--fixed", "1000", "--quad", "1"])
    assert code == 0
    assert payload["plan"]["operate"] is True
    assert payload["plan"]["total_profit"] == 3000


def test_producer_shuts_down(capsys):
    assert main(["producer", "--prices", "10", "--fixed", "1000", "--quad", "1"]) == 0
    assert "shut down" in capsys.readouterr().out


def test_producer_rejects_zero_quadratic(capsys):
    code, payload = run_json(capsys, ["producer", "--prices", "10", "--quad", "0"])
    assert code == 2
    assert "c must be > 0" in payload["error"]["message"]


def test_household_rejects_beta_zero(capsys):
    code, _ = run_json(capsys, ["household", "--beta", "0", "--delta", "1", "--alpha", "0.3"])
    assert code == 2


def test_household_closed_form_simulation_and_csv(capsys, tmp_path):
    out_csv = tmp_path / "vf.csv"
    code, payload = run_json(capsys, [
        "household", "--beta", "0.95", "--delta", "1", "--alpha", "0.3", "--A", "1",
        "--utility", "log", "--grid-n", "501", "--compare-closed-form",
        "--simulate", "100", "--csv", str(out_csv),
    ])
    assert code == 0
    assert payload["closed_form"]["within_tolerance"] is True
    assert payload["simulation"]["dp"]["lifetime_utility"] > payload["simulation"]["myopic"]["lifetime_utility"]

    with open(out_csv, newline="") as f:
        reader = csv.reader(f)
        assert next(reader) == ["K", "V", "K_prime", "C"]
        assert len(list(reader)) == 501


def test_household_text_mode(capsys):
    assert main(["household", "--beta", "0.9", "--delta", "0.1", "--alpha", "0.3",
                 "--utility", "crra", "--sigma", "2", "--grid_n", "101"]) == 0
    out = capsys.readouterr().out
    assert "iterations:" in out
    assert "steady-state capital" in out


def test_reproduce(capsys):
    code, payload = run_json(capsys, ["reproduce", "--grid-n", "501"])
    assert code == 0
    assert payload["passed"] is True
    assert all(check["passed"] for check in payload["checks"])


def test_envelope_names_its_format(capsys, edge_file):
    assert main(["mst", edge_file, "--json"]) == 0
    envelope = json.loads(capsys.readouterr().out)
    assert envelope["format"] == "json"
    assert envelope["command"] == "mst"


def test_path_invalid_utf8(capsys, tmp_path):
    path = tmp_path / "binary.txt"
    path.write_bytes(b"a b 2\n\xff\xfe c 3\n")
    code, payload = run_json(capsys, ["path", str(path), "--source", "a", "--target", "b"])
    assert code == 2
    assert payload["error"]["type"] == "GraphParseError"
    assert "line 2" in payload["error"]["message"]


def test_graph_file_is_a_directory(capsys, tmp_path):
    code, payload = run_json(capsys, ["mst", str(tmp_path)])
    assert code == 2
    assert payload["error"]["type"] == "IsADirectoryError"


def test_household_unwritable_csv(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code, payload = run_json(capsys, [
        "household", "--beta", "0.5", "--delta", "1", "--alpha", "0.3", "--grid-n", "51",
        "--csv", str(blocker / "sub" / "v.csv"),
    ])
    assert code == 2
    assert payload["error"]["type"] == "NotADirectoryError"


def test_unusable_log_dir(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code, payload = run_json(capsys, ["mst", "--example", "--log-dir", str(blocker / "logs")])
    assert code == 2
    assert payload["error"]["type"] == "NotADirectoryError"


def test_bad_environment_default_is_a_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("OPPCOST_GRID_N", "lots")
    assert main(["household", "--beta", "0.5", "--delta", "1", "--alpha", "0.3"]) == 2
    assert "invalid int value" in capsys.readouterr().err


def test_environment_default_is_used(capsys, monkeypatch):
    monkeypatch.setenv("OPPCOST_GRID_N", "51")
    code, payload = run_json(capsys, ["household", "--beta", "0.5", "--delta", "1", "--alpha", "0.3"])
    assert code == 0
    assert payload["solution"]["grid_n"] == 51


def test_repeated_runs_log_to_the_current_stderr(capsys):
    for _ in range(2):
        assert main(["mst", "--example"]) == 0
        assert "Using the bundled example graph" in capsys.readouterr().err
