import csv
import json
import subprocess
import sys

import pytest

from fracnet.cli import dumps, run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), out


def test_fractal_list(capsys):
    code, doc, _ = call(capsys, "fractal", "list", "--deterministic")
    assert code == 0 and doc["schema"] == "fr-1"
    assert {f["id"] for f in doc["fractals"]} >= {"sg3", "cantor3", "pentagasket"}


def test_resist_rational_and_float(capsys):
    code, doc, _ = call(capsys, "resist", "--fractal", "cantor3", "--lambda", "1/4", "--level", "3",
                        "--weights", "rational", "--deterministic")
    assert code == 0 and doc["resistance"] == "7/4"
    code, doc, text = call(capsys, "resist", "--fractal", "cantor3", "--lambda", "0.25", "--level", "3",
                           "--deterministic")
    assert doc["resistance"] == pytest.approx(1.75) and '"lambda": 0.25' in text


def test_deterministic_output_is_byte_identical(capsys):
    argv = ["resist", "--fractal", "sg3", "--lambda", "0.2", "--level", "4", "--deterministic"]
    _, _, a = call(capsys, *argv)
    _, _, b = call(capsys, *argv)
    assert a == b
    _, doc, _ = call(capsys, *argv[:-1])
    assert "wall_time_ms" in doc


def test_float_format():
    text = dumps({"a": 0.1, "b": 2.0, "c": float("inf"), "d": 1 / 3})
    assert '"a": 0.10000000000000001' in text
    assert '"b": 2.0' in text and '"c": "inf"' in text
    assert '"d": 0.33333333333333331' in text


def test_scan_lambdas_and_csv(capsys, tmp_path):
    path = tmp_path / "scan.csv"
    code, doc, _ = call(capsys, "scan", "--fractal", "sg3", "--lambdas", "0.1,0.15", "--levels", "6",
                        "--csv", str(path), "--deterministic")
    assert code == 0
    assert [s["aggregate"] for s in doc["scan"]] == ["ZERO", "ZERO"]
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["fractal", "lambda", "n", "R_n", "classification"]
    assert len(rows) == 1 + 2 * 6


def test_scan_bisect(capsys):
    code, doc, _ = call(capsys, "scan", "--fractal", "cantor_x_interval", "--which", "lambda1", "--pair", "1,3",
                        "--lambda-lo", "0.05", "--lambda-hi", "0.2", "--levels", "6", "--deterministic")
    assert code == 0
    br = doc["bracket"]
    assert br["lo"] <= 1 / 9 <= br["hi"]
    assert abs(doc["beta_estimate"] - 2) < 0.3


def test_scan_undecided_only_exit_code(capsys):
    code, doc, _ = call(capsys, "scan", "--fractal", "cantor_x_interval", "--pair", "1,4", "--lambdas", "0.1",
                        "--levels", "6", "--deterministic")
    assert code == 3
    assert doc["scan"][0]["series"][0]["classification"] == "UNDECIDED"


@pytest.mark.parametrize("argv", [
    ["resist", "--fractal", "nope", "--lambda", "0.2", "--level", "2"],
    ["resist", "--fractal", "sg3", "--lambda", "0.2", "--level", "2", "--pair", "1,9"],
    ["resist", "--fractal", "sg3", "--lambda", "abc", "--level", "2"],
    ["resist", "--fractal", "sg3", "--lambda", "1.5", "--level", "2"],
    ["resist", "--lambda", "0.2", "--level", "2"],
    ["scan", "--fractal", "sg3", "--levels", "1"],
    ["scan", "--fractal", "sg3", "--lambda-lo", "0.3", "--lambda-hi", "0.4", "--levels", "4"],
    ["walk", "--fractal", "sg3", "--lambda", "0.2", "--level", "1", "--escape-level", "2"],
    ["exponents", "--fractal", "sg3", "--grid", "0.4,0.45"],
    ["bogus"],
])
def test_invalid_input_exit_code(capsys, argv):
    assert run(argv) == 2


def test_solver_failure_exit_code(capsys):
    code = run(["resist", "--fractal", "sg3", "--lambda", "0.2", "--level", "4", "--tol", "1e-300"])
    assert code == 4


def test_oracle(capsys):
    _, doc, _ = call(capsys, "oracle", "--fractal", "cantor3", "--lambda", "0.25", "--deterministic")
    assert doc["limit"] == pytest.approx(2.0)
    _, doc, _ = call(capsys, "oracle", "--fractal", "sg3", "--lambda", "0.3", "--level", "4", "--deterministic")
    assert doc["fixed_point"]["exists"] and doc["fixed_point_threshold"] == pytest.approx(0.2, abs=1e-6)


def test_walk_and_energy_compare(capsys):
    code, doc, _ = call(capsys, "walk", "--fractal", "sg3", "--lambda", "0.2", "--level", "1", "--samples",
                        "2000", "--escape-level", "5", "--deterministic")
    assert code == 0 and sum(h["count"] for h in doc["histogram"]) == 2000
    code, doc, _ = call(capsys, "energy-compare", "--fractal", "sg3", "--lambda", "0.15", "--levels", "3,4",
                        "--function", "x", "--function", "radial", "--deterministic")
    assert code == 0 and len(doc["ratios"]) == 4 and doc["spread"] >= 1


def test_exponents(capsys, tmp_path):
    path = tmp_path / "exp.csv"
    code, doc, _ = call(capsys, "exponents", "--fractal", "cantor3", "--levels", "6", "--csv", str(path),
                        "--deterministic")
    assert code == 0 and doc["beta3"] == "inf" and doc["beta2"] == "inf"
    assert path.exists()


def test_out_file_and_cache(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FR_CACHE_DIR", str(tmp_path / "cache"))
    out = tmp_path / "g.json"
    argv = ["graph", "build", "--fractal", "sg3", "--level", "2", "--lambda", "1/5", "--out", str(out),
            "--deterministic"]
    assert run(argv) == 0
    first = out.read_text()
    assert len(list((tmp_path / "cache").glob("tree-*.pkl"))) == 1
    assert run(argv) == 0 and out.read_text() == first
    doc = json.loads(first)
    assert doc["graph"]["levels"] == [1, 3, 9] and doc["network"]["weight_kind"] == "rational"


def test_custom_spec(capsys, tmp_path):
    spec = {"maps": [{"ratio": 0.5, "translation": [0.0]}, {"ratio": 0.5, "translation": [0.5]}], "gamma": 0.5}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    code, doc, _ = call(capsys, "graph", "build", "--spec", str(path), "--level", "3", "--deterministic")
    assert code == 0 and doc["mode"] == "geometric"
    # [0, 1] halved: level-k cells form a path
    assert len(doc["graph"]["horizontal"]) == 1 + 3 + 7
    assert run(["exponents", "--spec", str(path)]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fracnet", "fractal", "list", "--deterministic"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["schema"] == "fr-1"
