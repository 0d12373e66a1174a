import json

import pytest

from lvar.cli import main

from conftest import example_decreasing_lambda


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def _example_eval_scenario():
    lam = example_decreasing_lambda()
    return {
        "version": 1,
        "command": "eval",
        "outcomes": ["hi", "mid", "lo"],
        "P": [0.625, 0.125, 0.25],
        "measures": {"P2": [0.15, 0.7, 0.15]},
        "X": [0.75, 0.5, 0.0],
        "lambda": lam.to_json(),
        "capacity": {"kind": "sup_of_measures", "measures": ["P", "P2"]},
    }


def test_eval_example_fixture(tmp_path, capsys):
    path = _write(tmp_path, "ex.json", _example_eval_scenario())
    assert main(["eval", "--scenario", path]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == 0.75


def test_eval_per_measure_values(tmp_path, capsys):
    doc = _example_eval_scenario()
    doc["capacity"] = {"kind": "measure", "base": "P"}
    path = _write(tmp_path, "p1.json", doc)
    assert main(["eval", "--scenario", path]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 0.0
    doc["capacity"] = {"kind": "measure", "base": "P2"}
    path = _write(tmp_path, "p2.json", doc)
    assert main(["eval", "--scenario", path]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 0.5


def test_curve_csv_contains_expected_row(tmp_path, capsys):
    doc = {
        "version": 1,
        "command": "curve",
        "outcomes": ["w0"],
        "P": [1.0],
        "ambiguity": {"kind": "phi_ball", "phi": "chi_squared", "delta": 0.25},
        "resolution": 0.01,
    }
    path = _write(tmp_path, "curve.json", doc)
    assert main(["curve", "--scenario", path]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "x,g"
    row = {line.split(",")[0]: float(line.split(",")[1]) for line in lines[1:]}
    assert row["0.2"] == pytest.approx(0.4, abs=1e-10)
    assert row["1.0"] == 1.0


def test_malformed_json_exits_2_without_output(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    out_file = tmp_path / "result.json"
    code = main(["eval", "--scenario", str(path), "--out", str(out_file)])
    assert code == 2
    assert not out_file.exists()
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["code"] == "SchemaError"
    assert "reason" in err["error"]


def test_missing_version_and_command_mismatch(tmp_path):
    doc = _example_eval_scenario()
    del doc["version"]
    path = _write(tmp_path, "nover.json", doc)
    assert main(["eval", "--scenario", path]) == 2
    doc = _example_eval_scenario()
    path = _write(tmp_path, "mismatch.json", doc)
    assert main(["robust", "--scenario", path]) == 2


def test_oracle_requires_seed(tmp_path):
    path = _write(tmp_path, "ex.json", _example_eval_scenario())
    assert main(["eval", "--scenario", path, "--oracle"]) == 2
    assert main(["eval", "--scenario", path, "--oracle", "--seed", "1"]) == 0


def test_contract_error_exits_3(tmp_path):
    doc = {
        "version": 1,
        "command": "robust",
        "outcomes": ["a", "b"],
        "P": [0.5, 0.5],
        "X": [1.0, 2.0],
        "lambda": {"direction": "decreasing", "breakpoints": [0.0],
                   "values": [0.8, 0.2]},
        "ambiguity": {"kind": "phi_ball", "phi": "kl", "delta": 0.1},
    }
    path = _write(tmp_path, "dec.json", doc)
    assert main(["robust", "--scenario", path]) == 3


def _share_scenario():
    return {
        "version": 1,
        "command": "share",
        "outcomes": ["w0", "w1", "w2", "w3"],
        "P": [0.25, 0.25, 0.25, 0.25],
        "X": [1.0, 2.0, 3.0, 4.0],
        "agents": [
            {"label": "a", "lambda": {"direction": "constant",
                                      "breakpoints": [], "values": [0.25]},
             "capacity": {"kind": "measure", "base": "P"}},
            {"label": "b", "lambda": {"direction": "constant",
                                      "breakpoints": [], "values": [0.25]},
             "capacity": {"kind": "measure", "base": "P"}},
        ],
        "grid": {"y_resolution": 0.25, "seed": 7},
    }


def test_share_document_and_oracle(tmp_path, capsys):
    path = _write(tmp_path, "share.json", _share_scenario())
    assert main(["share", "--scenario", path, "--oracle"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == 2.0
    assert doc["x_star"] == 2.0
    assert sum(doc["y_star"]) == pytest.approx(2.0)
    assert set(doc["partition"]) == {"a", "b"}
    assert doc["certificate"][0]["w_tail_cell"] <= \
        doc["certificate"][0]["lambda_at_y"] + 1e-9
    assert doc["oracle"]["brute_value"] >= doc["value"] - 1e-9


def test_share_csv_and_figure(tmp_path, capsys):
    path = _write(tmp_path, "share.json", _share_scenario())
    fig = tmp_path / "alloc.png"
    out = tmp_path / "alloc.csv"
    code = main(["share", "--scenario", path, "--format", "csv",
                 "--out", str(out), "--figure", str(fig)])
    assert code == 0
    body = out.read_text(encoding="utf-8")
    assert body.splitlines()[0] == "agent,outcome,value"
    assert fig.exists() and fig.stat().st_size > 0


def test_curve_figure_rendered_next_to_csv(tmp_path):
    doc = {
        "version": 1,
        "command": "curve",
        "outcomes": ["w0"],
        "P": [1.0],
        "ambiguity": {"kind": "phi_ball", "phi": "kl", "delta": 0.1},
    }
    path = _write(tmp_path, "curve.json", doc)
    fig = tmp_path / "curve.png"
    out = tmp_path / "curve.csv"
    assert main(["curve", "--scenario", path, "--out", str(out),
                 "--figure", str(fig)]) == 0
    assert out.exists() and fig.exists() and fig.stat().st_size > 0


def test_eval_rejects_figure(tmp_path):
    path = _write(tmp_path, "ex.json", _example_eval_scenario())
    assert main(["eval", "--scenario", path, "--figure",
                 str(tmp_path / "x.png")]) == 2


def test_como_share(tmp_path, capsys):
    doc = _share_scenario()
    doc["command"] = "como_share"
    path = _write(tmp_path, "como.json", doc)
    assert main(["como_share", "--scenario", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == 3.0  # single-agent quantile at level 0.25
    assert out["metadata"]["sufficient_condition_met"] is True


def test_robust_command_reports_routes(tmp_path, capsys):
    doc = {
        "version": 1,
        "command": "robust",
        "outcomes": ["a", "b", "c", "d"],
        "P": [0.25, 0.25, 0.25, 0.25],
        "X": [0.0, 1.0, 2.0, 3.0],
        "lambda": {"direction": "constant", "breakpoints": [], "values": [0.4]},
        "ambiguity": {"kind": "phi_ball", "phi": "chi_squared", "delta": 0.2},
        "grid": {"seed": 3, "sample_count": 60},
    }
    path = _write(tmp_path, "robust.json", doc)
    assert main(["robust", "--scenario", path, "--oracle"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["routes"]["transformed_lambda"] == out["value"]
    assert out["oracle"]["sampled_lower_bound"] <= out["value"] + 1e-12


def test_determinism_and_round_trip(tmp_path):
    path = _write(tmp_path, "share.json", _share_scenario())
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["share", "--scenario", path, "--out", str(out1)]) == 0
    assert main(["share", "--scenario", path, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text(encoding="utf-8"))
    assert doc["value"] == 2.0
    # the scenario file is never mutated
    assert json.loads(open(path, encoding="utf-8").read()) == _share_scenario()


def test_table_and_expectation_cap_capacities(tmp_path, capsys):
    doc = {
        "version": 1,
        "command": "eval",
        "outcomes": ["a", "b"],
        "P": [0.5, 0.5],
        "X": [1.0, 2.0],
        "lambda": {"direction": "constant", "breakpoints": [], "values": [0.4]},
        "capacity": {"kind": "table", "values": [0.0, 0.3, 0.35, 1.0]},
    }
    path = _write(tmp_path, "table.json", doc)
    assert main(["eval", "--scenario", path]) == 0
    # the tail {X > 1} is the second outcome, mask 0b10, table value 0.35
    assert json.loads(capsys.readouterr().out)["value"] == 1.0
    doc["capacity"] = {"kind": "expectation_cap", "Y": [2.0, 2.0], "base": "P"}
    path = _write(tmp_path, "cap.json", doc)
    assert main(["eval", "--scenario", path]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 2.0


def test_band_ambiguity_scenario(tmp_path, capsys):
    doc = {
        "version": 1,
        "command": "robust",
        "outcomes": ["a", "b", "c"],
        "P": [0.3, 0.4, 0.3],
        "variables": {"Y2": [2.0, 1.5, 1.8]},
        "X": [0.0, 1.0, 2.0],
        "lambda": {"direction": "increasing", "breakpoints": [1.0],
                   "values": [0.3, 0.6]},
        "ambiguity": {"kind": "band", "Y1": [0.0, 0.0, 0.0], "Y2": "Y2"},
    }
    path = _write(tmp_path, "band.json", doc)
    assert main(["robust", "--scenario", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "value" in out
