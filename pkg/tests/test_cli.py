import csv
import json
import subprocess
import sys

import pytest

from diracres import fixtures
from diracres.cli import fmt, main


def _config(tmp_path, P, **kw):
    cfg = {"potential": P.to_dict(), **kw}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def _rows(path):
    return list(csv.DictReader(open(path)))


def test_fmt_round_trip():
    for v in (0.1, 1 / 3, 2.0 ** -30, 1e300):
        assert float(fmt(v)) == v


def test_states_free(tmp_path):
    cfg = _config(tmp_path, fixtures.free(), region=[-3, 3, -3, 3])
    assert main(["states", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "states.csv")
    assert len(rows) == 1
    assert rows[0]["class"] == "virtual" and float(rows[0]["re_lambda"]) == -1.0
    meta = json.loads((tmp_path / "o" / "states.json").read_text())["meta"]
    assert meta["potential_sha256"] == fixtures.free().content_hash()


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["states", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_invalid_region(tmp_path):
    cfg = _config(tmp_path, fixtures.free(), region=[3, -3, -3, 3])
    assert main(["states", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_missing_potential(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"region": [-1, 1, -1, 1]}))
    assert main(["states", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_potential_path(tmp_path):
    (tmp_path / "pot.json").write_text(json.dumps(fixtures.q_const().to_dict()))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"potential": "pot.json", "grid": [1.5, 2.0]}))
    assert main(["scattering", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    assert len(_rows(tmp_path / "o" / "phase.csv")) == 2


def test_counting_free(tmp_path):
    cfg = _config(tmp_path, fixtures.free(), radii=[5, 10])
    assert main(["counting", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "counting.csv")
    assert [int(r["count"]) for r in rows] == [0, 0]


def test_det_grid(tmp_path):
    cfg = _config(tmp_path, fixtures.q_const(), grid={"re": [-2, 2, 3], "im": [2, 2, 1]}, N=80)
    assert main(["det", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "det.csv")
    assert [float(r["re_lambda"]) for r in rows] == [-2.0, 0.0, 2.0]
    assert all(float(r["im_lambda"]) == 2.0 for r in rows)


def test_det_real_point_rejected(tmp_path):
    cfg = _config(tmp_path, fixtures.q_const(), points=[[1.0, 0.0]])
    assert main(["det", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_threads_byte_identical(tmp_path):
    cfg = _config(tmp_path, fixtures.q_const(), points=[[1, 1], [2, 3], [-1, 2], [0, 5]], N=80)
    assert main(["det", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["det", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "4"]) == 0
    for name in ("det.csv", "det.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_subset(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"criteria": [1, 3]}))
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "verify.csv")
    assert [r["criterion"] for r in rows] == ["1", "3"]
    assert all(r["verdict"] == "pass" for r in rows)


def test_verify_failure_exit(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"criteria": [13]}))
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "o")]) != 0


def test_console_entry(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[")
    r = subprocess.run([sys.executable, "-m", "diracres.cli", "det", "--config", str(bad),
                        "--out", str(tmp_path / "o")], capture_output=True)
    assert r.returncode == 2
