import csv
import json

import pytest

from robust_sof.cli import benchmark_path, run


@pytest.fixture(scope="module")
def synth_json(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "r.json"
    assert run(["synth", "--system", str(benchmark_path()), "--method", "corollary1", "--mu", "2.5",
                "--out", str(out)]) == 0
    return out


def test_synth_writes_results(synth_json):
    doc = json.loads(synth_json.read_text())
    assert doc["result"]["status"] == "Optimal"
    assert doc["result"]["gamma_star"] > 0
    assert "created" in doc["metadata"]
    assert all(v < 0 for v in doc["certificate"].values())


def test_simulate_writes_csv_and_svg(tmp_path, synth_json):
    csv_path, svg_path = tmp_path / "t.csv", tmp_path / "t.svg"
    code = run(["simulate", "--system", str(benchmark_path()), "--gain", str(synth_json), "--steps", "200",
                "--x0", "random", "--seed", "7", "--out", str(csv_path), "--plot", str(svg_path)])
    assert code == 0
    rows = list(csv.reader(csv_path.open()))
    assert len(rows) == 202  # header plus 201 steps
    assert svg_path.read_text().lstrip().startswith("<?xml")


def test_outputs_reproducible(tmp_path, synth_json):
    outs = []
    for i in range(2):
        p = tmp_path / f"t{i}.csv"
        run(["simulate", "--system", "benchmark", "--gain", str(synth_json), "--steps", "30", "--seed", "3",
             "--out", str(p)])
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_negative_mu_is_input_error(capsys):
    assert run(["synth", "--system", "benchmark", "--mu", "-1"]) == 2
    assert "--mu" in capsys.readouterr().err


def test_bad_system_field_reported(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    data = json.loads(benchmark_path().read_text())
    data["B1"] = [[1.0]]
    bad.write_text(json.dumps(data))
    assert run(["synth", "--system", str(bad)]) == 2
    assert "B1" in capsys.readouterr().err


def test_unknown_flag():
    assert run(["synth", "--system", "benchmark", "--frobnicate"]) == 2


def test_infeasible_exit_code(tmp_path):
    out = tmp_path / "r.json"
    assert run(["synth", "--system", "benchmark", "--gamma-fixed", "0.3", "--out", str(out)]) == 1
    assert json.loads(out.read_text())["result"]["status"] == "Infeasible"


def test_robustness_and_analyze(tmp_path, synth_json):
    out = tmp_path / "rb.json"
    assert run(["robustness", "--system", "benchmark", "--gain", str(synth_json), "--trials", "5",
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["monte_carlo"]["fraction_stable"] == 1.0
    assert run(["analyze", "--system", "benchmark", "--gain", str(synth_json)]) == 0
    assert run(["analyze", "--system", "benchmark"]) == 1


def test_demo_variants(tmp_path, capsys):
    assert run(["demo", "--out-dir", str(tmp_path / "d")]) == 0
    out = capsys.readouterr().out
    assert "gamma*" in out and (tmp_path / "d" / "trajectory.svg").exists()
    assert run(["demo", "--method", "theorem1", "--out-dir", str(tmp_path / "e")]) == 0
    assert "rank cond." in capsys.readouterr().out
    run(["demo", "--gamma-fixed", "0.02", "--out-dir", str(tmp_path / "f")])
    assert "0.02: feasible" in capsys.readouterr().out


def test_gain_file_errors(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"K": [[1.0]]}))
    assert run(["simulate", "--system", "benchmark", "--gain", str(p)]) == 2
    assert run(["simulate", "--system", "benchmark", "--gain", str(tmp_path / "missing.json")]) == 2
