"""Exit codes and output contracts of the prefnav command."""

import json
import shutil
from importlib import resources

import pytest

from prefnav.cli import main


def test_run_prints_result_json(capsys):
    code = main(["run", "--map", "map1", "--method", "compliant", "--seed", "3"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    for key in ("success", "steps", "violations", "trajectory", "observations"):
        assert key in doc
    assert doc["failure"] == ""


def test_run_byte_identical(capsys):
    argv = ["run", "--map", "map1", "--method", "compliant", "--seed", "11"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_run_overrides(capsys):
    code = main(["run", "--map", "map1", "--method", "compliant", "--seed", "2",
                 "--delta-t", "100", "--t-max", "8"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["steps"] == 8
    assert [t for t, _ in doc["observations"]] == [0]


def test_unknown_map_is_invalid_input(capsys):
    assert main(["run", "--map", "nosuchmap.json", "--method", "compliant",
                 "--seed", "1"]) == 2
    assert "invalid input" in capsys.readouterr().err


def test_bad_method_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["run", "--map", "map1", "--method", "psychic", "--seed", "1"])
    assert e.value.code == 2


def test_sweep_writes_csv_and_ranking(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "maps": ["map1"], "methods": ["compliant"], "delta_ts": [5],
        "episodes": 1, "instances": 2, "seed": 1, "iterations": 100}))
    out = tmp_path / "table.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "map,method,delta_T,episodes,success_rate,mean_steps,mean_violations"
    assert len(lines) == 2 and lines[1].startswith("map1,compliant,5,2,")
    assert capsys.readouterr().out.startswith("compliant ")


def test_sweep_rejects_unknown_config_keys(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"maps": ["map1"], "surprise": 1}))
    assert main(["sweep", "--config", str(cfg),
                 "--out", str(tmp_path / "t.csv")]) == 2


def test_bench_over_map_directory(tmp_path, capsys):
    with resources.files("prefnav.maps").joinpath("map1.json").open("rb") as src:
        with open(tmp_path / "m1.json", "wb") as dst:
            shutil.copyfileobj(src, dst)
    out = tmp_path / "bench.csv"
    assert main(["bench", "--maps", str(tmp_path), "--runs", "1",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "map,method,runs,solve_ms,solve_ci,update_ms,update_ci"
    assert len(lines) == 5    # four methods on one map


def test_bench_rejects_empty_directory(tmp_path):
    assert main(["bench", "--maps", str(tmp_path), "--runs", "1",
                 "--out", str(tmp_path / "b.csv")]) == 2
