from __future__ import annotations

import csv
import json

import pytest

from hypwarp import cli
from hypwarp.errors import EvaluationFailure


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _strip(text):
    rep = json.loads(text)
    rep.pop("timestamp")
    return rep


def test_constants_example(capsys):
    code, out, _ = _run(capsys, "constants", "--n", "2", "--c", "2", "--xi", "0", "--eps", "0", "--t0", "5")
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["values"]["C"] == pytest.approx(4.98e8, rel=1e-3)
    assert rep["config"]["c"] == 2.0 and rep["seed"] == 0
    assert list(rep) == sorted(rep)


def test_deform_example(capsys, tmp_path):
    path = tmp_path / "k.csv"
    code, out, _ = _run(capsys, "deform", "--metric", "ellipsoid:1,1,2", "--a", "6", "--d", "16",
                        "--verify-ball-close", "--eps", "0.5", "--xi", "0", "--samples", "200", "--csv", str(path))
    rep = json.loads(out)
    assert rep["result"]["core_curvature"]["pass"]
    ball = rep["result"]["ball_close"]
    assert ball["core_exact"] and not ball["radius_ok"]
    assert code == (0 if ball["verdict"] else 1)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "abs_K_plus_1"] and len(rows) > 100


def test_verify_chart_csv(capsys, tmp_path):
    path = tmp_path / "eta.csv"
    code, out, _ = _run(capsys, "verify-chart", "--metric", "round", "--t0", "3,6", "--warp", "sinh",
                        "--points", "2", "--csv", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t0", "measured_eta"] and [r[0] for r in rows[1:]] == ["3.0", "6.0"]
    assert json.loads(out)["result"]["warp"] == "sinh"


def test_bounded_slowness_curvature(capsys):
    code, out, _ = _run(capsys, "bounded", "--metric", "round", "--c", "50")
    assert code == 0 and json.loads(out)["result"]["c_hat"] >= 4
    code, out, _ = _run(capsys, "bounded", "--metric", "round", "--c", "5")
    assert code == 1
    code, out, _ = _run(capsys, "slowness", "--metric", "ellipsoid:1,1,2", "--a", "6", "--d", "16")
    assert code == 0 and json.loads(out)["result"]["direct_eps"] > 0
    code, out, _ = _run(capsys, "curvature", "--metric", "round", "--region", "1,5", "--samples", "50")
    assert code == 0 and json.loads(out)["result"]["sup_abs_K_plus_1"] < 1e-6


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"metric": "round", "samples": 30, "region": "1,3"}))
    code, out, _ = _run(capsys, "curvature", "--config", str(cfg), "--samples", "40")
    rep = json.loads(out)
    assert code == 0 and rep["config"]["samples"] == 40 and rep["config"]["region"] == [1.0, 3.0]
    txt = tmp_path / "c.txt"
    txt.write_text("# comment\nmetric = round\nsamples = 25\n")
    code, out, _ = _run(capsys, "curvature", "--config", str(txt))
    assert code == 0 and json.loads(out)["config"]["samples"] == 25


def test_usage_errors_name_key(capsys, tmp_path):
    code, _, err = _run(capsys, "bounded", "--metric", "torus")
    assert code == 2 and "[metric]" in err
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"planez": 2}))
    code, _, err = _run(capsys, "curvature", "--config", str(cfg))
    assert code == 2 and "planez" in err
    code, _, err = _run(capsys, "verify-chart", "--warp", "cosh")
    assert code == 2 and "[warp]" in err
    code, _, _ = _run(capsys, "constants", "--c", "0.5")
    assert code == 2
    code, _, _ = _run(capsys, "frobnicate")
    assert code == 2


def test_numeric_failure_exit(capsys, monkeypatch):
    def boom(cfg):
        raise EvaluationFailure("bad value", location={"x": [0.0, 0.0]})

    monkeypatch.setitem(cli.HANDLERS, "constants", boom)
    code, _, err = _run(capsys, "constants")
    assert code == 3 and "EvaluationFailure" in err and "'x'" in err


def test_threads_do_not_change_output(capsys, monkeypatch):
    argv = ["verify-chart", "--metric", "round", "--t0", "3,5", "--points", "3"]
    _, serial, _ = _run(capsys, *argv)
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    _, threaded, _ = _run(capsys, *argv)
    assert _strip(serial) == _strip(threaded)
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    code, _, err = _run(capsys, *argv)
    assert code == 2 and cli.THREADS_ENV in err


def test_out_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert cli.main(["constants", "--out", str(path)]) == 0
    assert json.loads(path.read_text())["command"] == "constants"
    assert capsys.readouterr().out == ""
