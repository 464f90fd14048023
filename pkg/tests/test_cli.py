import csv
import io
import json
import math

import pytest

from wrcayley.cli import main
from wrcayley.critical import lambda_cr, lambda_cr_anti, lambda_cr_prime


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_hardcore(capsys):
    code, out, _ = run(capsys, "solve", "--k", "2", "--theta", "0", "--lambda", "3")
    d = json.loads(out)
    assert code == 0 and d["count"] == 3 and len(d["laws"]) == 3
    assert all(law["residual"] < 1e-12 for law in d["laws"])


def test_solve_theta_one(capsys):
    code, out, _ = run(capsys, "solve", "--k", "2", "--theta", "1", "--lambda", "5")
    d = json.loads(out)
    assert d["count"] == 1 and d["laws"] == [pytest.approx({"x": 5.0, "y": 5.0, "residual": 0.0}, abs=1e-14)]


def test_solve_antiferro_mid(capsys):
    lo, hi = lambda_cr_anti(5, 5.0)
    code, out, _ = run(capsys, "solve", "--k", "5", "--theta", "5", "--lambda", repr(math.sqrt(lo * hi)))
    d = json.loads(out)
    assert d["count"] == 3
    assert d["critical"]["lambda_cr_anti_low"] == lo and d["critical"]["lambda_cr_anti_high"] == hi


def test_usage_errors(capsys):
    assert run(capsys, "solve", "--k", "2")[0] == 2
    assert run(capsys, "solve", "--k", "2", "--theta", "-1", "--lambda", "1")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    code, _, err = run(capsys, "sweep", "--k", "2", "--theta-lo", "0", "--theta-hi", "0.1", "--theta-steps", "1",
                       "--lambda-lo", "1", "--lambda-hi", "2", "--lambda-steps", "2")
    assert code == 2 and "steps" in err


def test_sweep_two_by_two(capsys, tmp_path):
    out_file = tmp_path / "s.csv"
    args = ["sweep", "--k", "2", "--theta-lo", "0", "--theta-hi", "0.2", "--theta-steps", "2",
            "--lambda-lo", "1", "--lambda-hi", "10", "--lambda-steps", "2", "-o", str(out_file)]
    assert run(capsys, *args)[0] == 0
    text = out_file.read_text()
    r = rows(text)
    assert len(r) == 4
    assert [(x["theta"], x["lambda"]) for x in r] == [("0", "1"), ("0", "10"), ("0.20000000000000001", "1"),
                                                      ("0.20000000000000001", "10")]
    run(capsys, *args)
    assert out_file.read_text() == text


def test_sweep_antiferro_regions(capsys):
    code, out, _ = run(capsys, "sweep", "--k", "5", "--theta-lo", "1.1", "--theta-hi", "8", "--theta-steps", "4",
                       "--lambda-lo", "0.001", "--lambda-hi", "1", "--lambda-steps", "40")
    for r in rows(out):
        th, lam = float(r["theta"]), float(r["lambda"])
        pair = lambda_cr_anti(5, th)
        inside = pair is not None and pair[0] < lam < pair[1]
        assert r["count"] == ("3" if inside else "1")


def test_sweep_parallel_matches_serial(capsys, monkeypatch):
    args = ["sweep", "--k", "4", "--theta-lo", "0", "--theta-hi", "0.5", "--theta-steps", "8",
            "--lambda-lo", "0.5", "--lambda-hi", "20", "--lambda-steps", "10"]
    monkeypatch.setenv("WR_THREADS", "1")
    serial = run(capsys, *args)[1]
    monkeypatch.setenv("WR_THREADS", "2")
    parallel = run(capsys, *args)[1]
    assert serial == parallel


@pytest.mark.parametrize("k", [4, 8])
def test_ferro_curves_two_curve_structure(capsys, k):
    code, out, _ = run(capsys, "curves", "--k", str(k), "--regime", "ferro", "--theta-steps", "20")
    for r in rows(out):
        th = float(r["theta"])
        assert float(r["lambda_cr"]) == lambda_cr(k, th)
        if r["lambda_cr_prime"]:
            assert float(r["lambda_cr_prime"]) == lambda_cr_prime(k, th)
        assert r["ordered"] == "true"


def test_curves_k2_ferro(capsys):
    _, out, _ = run(capsys, "curves", "--k", "2", "--regime", "ferro", "--theta-steps", "10")
    for r in rows(out):
        th = float(r["theta"])
        assert float(r["lambda_cr"]) == pytest.approx(2.25 / (1 - 3 * th), rel=1e-15)
        assert th < 1 / 3


def test_curves_periodic(capsys):
    code, out, _ = run(capsys, "curves", "--k", "6", "--regime", "periodic", "--theta-steps", "10")
    r = rows(out)
    assert code == 0 and len(r) == 10
    assert all(0 < float(x["theta"]) < 1 / 49 and x["ordered"] == "true" for x in r)


def test_curves_periodic_k5_error(capsys):
    code, _, err = run(capsys, "curves", "--k", "5", "--regime", "periodic")
    assert code == 2 and "k^2-6k+1" in err


def test_curves_json(capsys):
    _, out, _ = run(capsys, "curves", "--k", "5", "--regime", "antiferro", "--theta-steps", "5", "--format", "json")
    d = json.loads(out)
    assert len(d) == 5 and d[-1]["ordered"]


def test_verify_quick_subset(capsys):
    code, out, err = run(capsys, "verify", "--level", "quick", "--only", "c1", "c3", "c6")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and len(rep["checks"]) == 3
    assert "PASS" in err
