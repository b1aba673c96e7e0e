import csv
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given
from hypothesis import strategies as st

from lincvx import __version__
from lincvx.cli import main
from lincvx.report import (CriterionReport, dumps, emit_report, exit_code, to_jsonable, witness)

SPECS = Path(__file__).resolve().parent.parent / "specs"


def _spec(name):
    return str(SPECS / f"{name}.json")


@pytest.fixture
def runner():
    return CliRunner()


# ------------------------------------------------------------------ reports
def _reports():
    return [CriterionReport("gauge", "pass", 0.25, witness(np.array([0.1 + 0.2j, 0]), X=np.array([1j, 0])),
                            10, 1.5, details={"tol": 1e-9}, margins=np.array([0.25, 0.5])),
            CriterionReport("hull", "fail", -0.0, witness(np.zeros(2), rho=0.0), 4)]


def test_json_roundtrip(tmp_path):
    reps = _reports()
    path = tmp_path / "r.json"
    emit_report(reps, "json", path, config={"seed": 1}, include_timing=True)
    doc = json.loads(path.read_text())
    assert doc["tool_version"] == __version__ and doc["config"] == {"seed": 1}
    back = [CriterionReport.from_dict(d) for d in doc["reports"]]
    assert back == reps
    assert doc["reports"][1]["worst_margin"] == 0.0


def test_timing_left_out_by_default():
    doc = json.loads(dumps(_reports()))
    assert all(r["elapsed_ms"] is None for r in doc["reports"])


def test_empty_report_list(tmp_path):
    emit_report([], "json", tmp_path / "e.json")
    doc = json.loads((tmp_path / "e.json").read_text())
    assert doc["reports"] == [] and doc["config"] == {}


def test_csv_margins(tmp_path):
    emit_report(_reports(), "csv", tmp_path / "m.csv")
    rows = list(csv.reader((tmp_path / "m.csv").open()))
    assert rows == [["criterion", "sample", "margin"], ["gauge", "0", "0.25"], ["gauge", "1", "0.5"]]
    with pytest.raises(ValueError):
        emit_report([], "xml", tmp_path / "x")


def test_report_invariants():
    with pytest.raises(ValueError):
        CriterionReport("x", "maybe", 0.0)
    with pytest.raises(ValueError):
        CriterionReport("x", "fail", -1.0)
    with pytest.raises(ValueError):
        CriterionReport("x", "pass", float("nan"))


def test_to_jsonable_handles_numpy():
    out = to_jsonable({"a": np.float64(1.5), "b": [np.complex128(1 + 2j)], "c": np.int64(3),
                       "d": np.array([1.0, 2.0]), "e": (True, None)})
    assert json.dumps(out) == '{"a": 1.5, "b": [[1.0, 2.0]], "c": 3, "d": [1.0, 2.0], "e": [true, null]}'


@given(st.lists(st.sampled_from(["pass", "fail", "inconclusive"]), max_size=8))
def test_exit_code_contract(verdicts):
    reps = [CriterionReport("c", v, 0.0, {"point": []} if v == "fail" else None) for v in verdicts]
    expected = 1 if "fail" in verdicts else 3 if "inconclusive" in verdicts else 0
    assert exit_code(reps) == expected


# ---------------------------------------------------------------------- cli
def test_check_model_fails_with_witness(runner, tmp_path):
    out = tmp_path / "m.json"
    res = runner.invoke(main, ["check", _spec("modelE"), "--criteria", "defect,hull",
                               "--samples", "300", "--json", str(out)])
    assert res.exit_code == 1
    doc = json.loads(out.read_text())
    assert [r["verdict"] for r in doc["reports"]] == ["fail", "fail"]
    assert "workers" not in doc["config"]


def test_check_ball_passes_and_is_byte_identical(runner, tmp_path):
    args = ["check", _spec("ball"), "--criteria", "gauge,defect,hor22", "--samples", "200",
            "--seed", "3"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert runner.invoke(main, args + ["--json", str(a)]).exit_code == 0
    assert runner.invoke(main, args + ["--json", str(b), "--workers", "2"]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_check_csv_and_timing(runner, tmp_path):
    res = runner.invoke(main, ["check", _spec("ball"), "--criteria", "gauge", "--samples", "20",
                               "--csv", str(tmp_path / "m.csv"), "--json", str(tmp_path / "t.json"),
                               "--timing"])
    assert res.exit_code == 0
    assert len((tmp_path / "m.csv").read_text().splitlines()) == 21
    assert json.loads((tmp_path / "t.json").read_text())["reports"][0]["elapsed_ms"] > 0


def test_check_usage_errors(runner, tmp_path):
    assert runner.invoke(main, ["check", str(tmp_path / "missing.json")]).exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "torus"}')
    assert runner.invoke(main, ["check", str(bad)]).exit_code == 2
    assert runner.invoke(main, ["check", _spec("ball"), "--criteria", "nope"]).exit_code == 2
    assert runner.invoke(main, ["check", _spec("ball"), "--samples", "0"]).exit_code == 2


def test_check_io_error(runner, tmp_path):
    res = runner.invoke(main, ["check", _spec("ball"), "--criteria", "gauge", "--samples", "5",
                               "--json", str(tmp_path / "no" / "such" / "dir.json")])
    assert res.exit_code == 4


def test_defect_command(runner):
    res = runner.invoke(main, ["defect", _spec("modelE"), "--point", "0,0,0,0"])
    assert res.exit_code == 1
    doc = json.loads(res.stdout)
    assert doc["defect"] == pytest.approx(-1, abs=1e-3)
    res = runner.invoke(main, ["defect", _spec("ball"), "--point", "1,0,0,0"])
    assert res.exit_code == 0 and json.loads(res.stdout)["defect"] == pytest.approx(0.5, abs=1e-6)
    # off-boundary input is projected along the ray from the anchor
    res = runner.invoke(main, ["defect", _spec("ball"), "--point", "0.5,0,0,0"])
    assert res.exit_code == 0 and json.loads(res.stdout)["point"][0][0] == pytest.approx(1.0)
    assert runner.invoke(main, ["defect", _spec("ball"), "--point", "1,0,0"]).exit_code == 2


def test_discs_command(runner, tmp_path):
    res = runner.invoke(main, ["discs", "--c", "1", "--delta", "0.05", "--csv", str(tmp_path / "c.csv")])
    assert res.exit_code == 0
    doc = json.loads(res.stdout)
    assert doc["discriminant"] == -0.79 and doc["valid"] and len(doc["discs"]) == 2
    rows = list(csv.reader((tmp_path / "c.csv").open()))[1:]
    assert len(rows) == 1024 and all(float(r[2]) < 0 for r in rows)
    bad = runner.invoke(main, ["discs", "--c", "1", "--delta", "0.5"])
    assert bad.exit_code == 1 and json.loads(bad.stdout)["discriminant"] == 2.0
    assert runner.invoke(main, ["discs", "--c", "0.5", "--delta", "0.1"]).exit_code == 2


def test_hull_command(runner, tmp_path):
    res = runner.invoke(main, ["hull", "--system", "canonical", "--query", "0.8,0,0.5,0"])
    doc = json.loads(res.stdout)
    assert res.exit_code == 0 and not doc["in_convex_hull"] and not doc["in_double_polar"]
    assert doc["double_polar_value"] == pytest.approx(1.3)
    res = runner.invoke(main, ["hull", "--system", str(SPECS / "canonical_system.json"),
                               "--query", "0.5,0,0.5,0"])
    assert json.loads(res.stdout)["in_convex_hull"]
    bad = tmp_path / "s.json"
    bad.write_text("[]")
    assert runner.invoke(main, ["hull", "--system", str(bad), "--query", "0,0,0,0"]).exit_code == 2
    assert runner.invoke(main, ["hull", "--system", "nowhere.json", "--query", "0,0,0,0"]).exit_code == 2


def test_pipeline_command(runner, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    res = runner.invoke(main, ["pipeline", _spec("modelE"), "--samples", "300", "--json", str(a)])
    assert res.exit_code == 1
    runner.invoke(main, ["pipeline", _spec("modelE"), "--samples", "300", "--json", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["status"] == "violation"
    assert runner.invoke(main, ["pipeline", _spec("ball"), "--samples", "200"]).exit_code == 0
    assert runner.invoke(main, ["pipeline", _spec("perturbed_ball"), "--samples", "200"]).exit_code == 3
