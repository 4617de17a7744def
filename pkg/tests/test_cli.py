import json
import subprocess
import sys

import numpy as np

from mck import cli
from mck.lgp import LgpVerdict


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip().startswith("{") else out), err


def region_file(tmp_path, cells, closed=True, name="r.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"origin": [0, 0], "h": 1.0, "cells": cells, "closed": closed}))
    return str(p)


TRIANGLE = [[i, j] for i in range(12) for j in range(12) if i + j <= 11]
ELL = [[i, j] for i in range(12) for j in range(12) if i < 4 or j < 4]


def test_certify_triangle(capsys, tmp_path):
    code, out, _ = run(capsys, "certify-convex", "--file", region_file(tmp_path, TRIANGLE))
    assert code == 0 and out["exit_code"] == 0 and out["schema"] == 1
    assert out["certificate"]["verdict"] == "Convex"


def test_certify_ell(capsys, tmp_path):
    code, out, _ = run(capsys, "certify-convex", "--file", region_file(tmp_path, ELL))
    assert code == 1 and out["certificate"]["verdict"] == "NotLocallyConvex"
    ws = np.array(out["certificate"]["witnesses"]) + 0.5
    assert (np.abs(ws - 4.0).max(axis=1) <= 4.0).all()


def test_certify_input_errors(capsys, tmp_path):
    code, _, err = run(capsys, "certify-convex", "--file", str(tmp_path / "missing.json"))
    assert code == 2 and "not found" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "certify-convex", "--file", str(bad))
    assert code == 2 and "malformed" in err
    assert run(capsys, "certify-convex")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_certify_not_closed(capsys, tmp_path):
    code, out, _ = run(capsys, "certify-convex", "--file", region_file(tmp_path, TRIANGLE, closed=False))
    assert code == 3 and "not declared closed" in out["error"]


def test_diagnose(capsys):
    code, out, _ = run(capsys, "diagnose", "--scene", "prato", "--h", "1/32", "--samples", "100000", "--seed", "1")
    assert code == 0 and out["verdict"]["open_onto_image"] is True
    code, out, _ = run(capsys, "diagnose", "--scene", "karshon_lerman", "--h", "1/32", "--samples", "100000",
                       "--seed", "1")
    assert code == 1 and out["verdict"]["open_onto_image"] is False


def test_diagnose_input_errors(capsys):
    code, _, err = run(capsys, "diagnose", "--scene", "nope", "--seed", "1")
    assert code == 2 and "available" in err
    code, _, err = run(capsys, "diagnose", "--scene", "prato")
    assert code == 2 and "--seed" in err
    assert run(capsys, "diagnose", "--scene", "circle_height_space", "--seed", "1")[0] == 2
    assert run(capsys, "diagnose", "--scene", "prato", "--seed", "1", "--h", "0")[0] == 2


def test_lgp(capsys):
    code, out, _ = run(capsys, "lgp", "--scene", "cylinder")
    assert code == 0 and out["verdict"]["consistent"]
    code, out, _ = run(capsys, "lgp", "--scene", "circle_height_space")
    assert code == 1 and out["message"] == "LFC violated at 2 vertices"
    assert out["verdict"]["hypotheses"]["witnesses"]["lfc"] == [0, 32]


def test_lgp_file(capsys, tmp_path):
    p = tmp_path / "path.json"
    p.write_text(json.dumps({"vertices": 5, "edges": [[i, i + 1] for i in range(4)], "f": [0, 1, 2, 3, 4],
                             "eps": 0.5}))
    code, out, _ = run(capsys, "lgp", "--file", str(p))
    # no declared cones, so the local convexity hypothesis cannot be checked
    assert code == 1 and out["space"] == "path.json" and out["vertices"] == 5
    assert out["message"] == "local convexity data failed"
    assert out["verdict"]["hypotheses"]["witnesses"]["lcd"] == {"error": "declared cones are missing"}
    p.write_text(json.dumps({"edges": []}))
    assert run(capsys, "lgp", "--file", str(p))[0] == 2


def test_lgp_alarm_exit_code():
    hyp = {"lfc_ok": True, "lcd_ok": True, "closed_ok": True, "witnesses": {}}
    con = {"fibers_connected": False, "open_onto_image": True, "image_convex": True}
    v = LgpVerdict(hyp, con, consistent=False)
    assert cli.lgp_exit_code(v) == 4
    assert cli.lgp_exit_code(LgpVerdict(hyp, dict(con, fibers_connected=True), True)) == 0
    assert "consistency alarm" in cli._lgp_message(v)


def test_experiments(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", "schur-horn", "--lambda", "2,1,0", "--trials", "500", "--seed", "0")
    assert code == 0 and out["report"]["failures"] == 0
    code, out, _ = run(capsys, "experiment", "toric", "--samples", "20000", "--h", "1/32", "--seed", "0",
                       "--out", str(tmp_path))
    assert code == 0
    hull = json.loads((tmp_path / "cp2_toric_hull.json").read_text())["hull"]
    assert len(hull) == 3
    assert (tmp_path / "experiment.json").is_file()
    code, out, _ = run(capsys, "experiment", "horn", "--a", "1,0", "--b", "1,0", "--seed", "0")
    assert code == 0 and out["report"]["extra"]["interval"] == [1.0, 2.0]
    assert run(capsys, "experiment", "horn", "--a", "0,1", "--seed", "0")[0] == 2
    assert run(capsys, "experiment", "nope", "--seed", "0")[0] == 2
    assert run(capsys, "experiment", "horn", "--seed", "0", "--tol", "-1")[0] == 2


def test_tsv_artifact(capsys, tmp_path):
    code, out, _ = run(capsys, "diagnose", "--scene", "c2_standard", "--h", "1/16", "--samples", "20000",
                       "--seed", "0", "--format", "tsv", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "c2_standard_samples.tsv").read_text().splitlines()
    assert lines[0].startswith("chart\t") and len(lines) > 1000


def test_output_is_byte_identical():
    argv = [sys.executable, "-m", "mck.cli", "experiment", "schur-horn", "--trials", "300", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and b'"schema": 1' in a


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
