import json
import subprocess
import sys

import numpy as np
import pytest

from octspec.cli import dump_operator, main
from octspec.qlop import QlOperator, load_operator


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def ops(tmp_path):
    return {
        "d12": write(tmp_path / "d12.json", QlOperator.real_diag([1.0, 2.0], 2).to_json()),
        "d49": write(tmp_path / "d49.json", QlOperator.real_diag([4.0, 9.0], 2).to_json()),
        "dm12": write(tmp_path / "dm12.json", QlOperator.real_diag([-1.0, 2.0], 2).to_json()),
        "zero": write(tmp_path / "zero.json", QlOperator.zeros(2, 2).to_json()),
        "skew": write(tmp_path / "skew.json",
                      QlOperator.from_real_matrix([[0.0, 1.0], [-1.0, 0.0]], 2).to_json()),
    }


def test_algebra_table(capsys):
    assert main(["algebra", "--v", "2", "table"]) == 0
    out = capsys.readouterr().out.splitlines()
    row = next(line for line in out if line.split()[0] == "i1")
    assert row.split()[1:] == ["+i1", "-i0", "+i3", "-i2"]


def test_algebra_identities(capsys):
    assert main(["algebra", "--v", "3", "identities", "--trials", "200"]) == 0
    out = capsys.readouterr().out
    assert "kappa rule        pass" in out
    assert "left_alternativity" in out and "(unexpected)" not in out


def test_algebra_zero_divisor(capsys):
    assert main(["algebra", "--v", "4", "zerodivisor"]) == 0
    assert "|a b| = 0.0" in capsys.readouterr().out
    assert main(["algebra", "--v", "3", "zerodivisor"]) == 2
    assert main(["algebra", "--v", "99", "table"]) == 2


def test_spectral_diagonal(ops, tmp_path, capsys):
    csv = tmp_path / "r.csv"
    assert main(["spectral", ops["d12"], "--mesh", "1e-3", "--csv", str(csv)]) == 0
    assert csv.read_text() == "b,rank\n1.0,4\n2.0,8\n"
    assert "ok" in capsys.readouterr().out


def test_spectral_zero_and_skew(ops, capsys):
    assert main(["spectral", ops["zero"]]) == 0
    assert "0.0,8" in capsys.readouterr().out
    assert main(["spectral", ops["skew"]]) == 2


def test_spectral_bad_file(tmp_path):
    assert main(["spectral", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["spectral", str(bad)]) == 2


def test_calc_sqrt(ops, tmp_path):
    f = write(tmp_path / "f.json", {"builtin": "sqrt"})
    out = tmp_path / "o.json"
    assert main(["calc", ops["d49"], f, "--out", str(out)]) == 0
    got = load_operator(json.loads(out.read_text()))
    assert got.allclose(QlOperator.real_diag([2.0, 3.0], 2), 0.0)


def test_calc_indicator(ops, tmp_path):
    f = write(tmp_path / "chi.json",
              {"cells": [{"lo": 0, "hi": "inf", "value": [1, 0, 0, 0]}], "default": [0, 0, 0, 0]})
    out = tmp_path / "p.json"
    assert main(["calc", ops["dm12"], f, "--out", str(out)]) == 0
    P = load_operator(json.loads(out.read_text()))
    assert P.is_graded_projection and P.allclose(QlOperator.real_diag([0.0, 1.0], 2), 0.0)


def test_calc_identity_is_byte_identical(ops, tmp_path):
    f = write(tmp_path / "id.json", {"builtin": "id"})
    out = tmp_path / "o.json"
    assert main(["calc", ops["d12"], f, "--out", str(out)]) == 0
    T = load_operator(json.loads(open(ops["d12"]).read()))
    assert out.read_text() == dump_operator(T)


def test_calc_undefined_on_spectrum(ops, tmp_path):
    f = write(tmp_path / "f.json", {"builtin": "sqrt"})
    assert main(["calc", ops["dm12"], f]) == 2
    g = write(tmp_path / "g.json", {"cells": [{"lo": 5, "hi": 6, "value": [1, 0, 0, 0]}]})
    assert main(["calc", ops["d12"], g]) == 2


def test_diag_report(tmp_path, capsys):
    s = write(tmp_path / "s.json", {"v": 1, "head": [], "tail": {"c": 1, "alpha": 1, "phase": "one"}})
    x = write(tmp_path / "x.json", {"v": 1, "head": [], "tail": {"d": 1, "beta": -2, "phase": "one"}})
    out = tmp_path / "r.json"
    assert main(["diag", s, "--vector", x, "--thresholds", "10", "100", "--contains", "7", "0",
                 "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "x in D(T): True; exponent -2" in text
    rep = json.loads(out.read_text())
    assert rep["bounding"][0]["rank"] == 10 and rep["contains"] is True


def test_example52_default(capsys):
    assert main(["example52"]) == 0
    out = capsys.readouterr().out
    assert "all four verdicts as expected: True" in out


def test_example52_rejects_small_horizon():
    assert main(["example52", "--horizon", "10"]) == 2


def test_example52_json_round_trip_and_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["example52", "--horizon", "10000", "--out", str(a)]) == 0
    assert main(["example52", "--horizon", "10000", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert json.loads(json.dumps(rep)) == rep
    assert rep["verdicts"]["D(Q+^B)"]["member"] is True


def test_spectral_json_round_trip(ops, tmp_path):
    out = tmp_path / "res.json"
    assert main(["spectral", ops["d12"], "--out", str(out), "--full"]) == 0
    from octspec.spectral import GradedResolution
    obj = json.loads(out.read_text())
    R = GradedResolution.from_json(obj)
    assert R.to_json(full=True) == obj


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "octspec.cli", "algebra", "--v", "1", "table"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "+i1" in r.stdout


def test_unknown_subcommand():
    assert main(["frobnicate"]) == 2
