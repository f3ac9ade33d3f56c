import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pseudopath import checks, cli
from pseudopath import kernel as K
from pseudopath import serialization as ser


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_kernel_csv(tmp_path, capsys):
    out = tmp_path / "k.csv"
    code, _, _ = _run(capsys, "kernel", "--p", 2, "--alpha", "-0.5,0", "--t", 1, "--grid", "-10,10,128", "--out", out)
    assert code == 0
    rows = list(csv.reader(out.open(encoding="utf-8")))
    assert rows[0] == ["x", "re", "im"] and len(rows) == 129
    x, v = K.read_kernel_csv(out)
    assert np.abs(v.real - np.exp(-x**2 / 2) / np.sqrt(2 * np.pi)).max() < 1e-12
    # at least 12 significant digits
    assert all(len(r[1].replace("-", "").replace(".", "").split("e")[0].lstrip("0")) >= 12
               for r in rows[1:] if float(r[1]) != 0)


def test_kernel_json_round_trips(capsys):
    code, out, _ = _run(capsys, "kernel", "--p", 3, "--alpha", "0,0.5", "--t", 1, "--grid", "-4,4,32", "--format", "json")
    assert code == 0
    obj = json.loads(out)
    spec = ser.spec_from_params(obj["spec"])
    grid = ser.parse_grid(obj["grid"])
    k = K.compute_kernel(spec, obj["t"], grid)
    values = np.array([complex(*v) for v in obj["values"]])
    assert np.array_equal(values, k.values)


def test_tvgrowth_documented_example(capsys):
    code, out, _ = _run(capsys, "tvgrowth", "--p", 4, "--alpha", "-1,0", "--t", 1, "--n", 10)
    obj = json.loads(out)
    assert code == 0
    assert set(obj) == {"p", "alpha", "t", "n", "per_slice_tv", "total", "verdict"}
    assert obj["alpha"] == [-1.0, 0.0] and obj["verdict"] == "NoBoundedComplexMeasure"
    assert obj["total"] == pytest.approx(obj["per_slice_tv"] ** 10)


def test_tvgrowth_heat(capsys):
    code, out, _ = _run(capsys, "tvgrowth", "--p", 2, "--alpha", "-0.5,0", "--t", 1, "--n", 10)
    assert code == 0 and json.loads(out)["verdict"] == "ProjectiveLimitPossible"


@pytest.mark.parametrize("argv, needle", [
    (["kernel", "--p", "3", "--alpha", "-1,0", "--t", "1", "--grid", "-1,1,8"], "odd p requires"),
    (["kernel", "--p", "2", "--alpha", "-1,0", "--t", "1e-6", "--grid", "-1,1,8"], "t_eps"),
    (["kernel", "--p", "2", "--alpha", "-1,0", "--t", "1", "--grid", "-1,1"], "grid"),
    (["kernel", "--p", "2", "--alpha", "a,b", "--t", "1", "--grid", "-1,1,8"], "could not convert"),
    (["tvgrowth", "--p", "4", "--alpha", "-1,0", "--t", "1", "--n", "0"], "n must be"),
    (["parseval", "--input", "/nonexistent.json"], "cannot read"),
])
def test_config_errors_exit_2(capsys, argv, needle):
    code, _, err = _run(capsys, *argv)
    assert code == 2 and needle in err


def test_computation_error_exits_1(capsys):
    code, _, err = _run(capsys, "kernel", "--p", 4, "--alpha", "-1,0", "--t", 1, "--grid", "-5,5,64")
    assert code == 1 and "GridTooNarrow" in err and "tail mass" in err


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json", encoding="utf-8")
    code, _, err = _run(capsys, "run", "--config", cfg)
    assert code == 2 and "not valid JSON" in err
    cfg.write_text(json.dumps({"command": "launch"}), encoding="utf-8")
    assert _run(capsys, "run", "--config", cfg)[0] == 2
    cfg.write_text(json.dumps({"command": "tvgrowth", "params": {"p": 4}, "format": "csv"}), encoding="utf-8")
    code, _, err = _run(capsys, "run", "--config", cfg)
    assert code == 2 and "format" in err


def test_run_config_matches_direct_call(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    target = tmp_path / "tv.json"
    config = cli.RunConfig("tvgrowth", {"p": 4, "alpha": [-1, 0], "t": 2, "n": 3}, str(target))
    assert cli.RunConfig.from_json(config.to_json()) == config
    cfg.write_text(json.dumps(config.to_json()), encoding="utf-8")
    assert _run(capsys, "run", "--config", cfg)[0] == 0
    _, direct, _ = _run(capsys, "tvgrowth", "--p", 4, "--alpha", "-1,0", "--t", 2, "--n", 3)
    assert target.read_text(encoding="utf-8") == direct


def _write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def test_fk_outputs(tmp_path, capsys):
    dk = 2 * np.pi / (8 * np.pi)
    u0 = _write(tmp_path / "u0.json", [{"y": [0.0], "w": [1, 0]}, {"y": [dk], "w": [0.5, 0]}, {"y": [-dk], "w": [0.5, 0]}])
    V = _write(tmp_path / "V.json", [{"y": [1.0], "w": [0.5, 0]}, {"y": [-1.0], "w": [0.5, 0]}])
    grid = f"{-4 * np.pi!r},{4 * np.pi!r},128"
    out, rep = tmp_path / "u.csv", tmp_path / "rep.json"
    code, _, _ = _run(capsys, "fk", "--p", 2, "--alpha", "-0.5,0", "--t", 0.25, "--nslices", 16, "--grid", grid,
                      "--u0", u0, "--potential", V, "--ladder", "4,8,32", "--out", out, "--report", rep)
    assert code == 0
    report = json.loads(rep.read_text(encoding="utf-8"))
    assert report["slices"] == [4, 8, 16, 32] and report["errors"][-1] < report["errors"][0]
    assert out.read_text(encoding="utf-8").splitlines()[0] == "x,re,im"
    code, _, err = _run(capsys, "fk", "--p", 2, "--alpha", "-0.5,0", "--t", 0.25, "--nslices", 16,
                        "--grid", "-10,10,128", "--u0", u0, "--potential", V)
    assert code == 2 and "multiples of 2*pi/L" in err


def test_parseval_command(tmp_path, capsys):
    inp = _write(tmp_path / "p.json", {"d": 2, "eigenvalues": [0.5, -0.3], "hbar": 1.0,
                                       "atoms": [{"y": [0.4, -0.2], "w": [1, 0.5]}]})
    for method in ("regularized", "growing_box"):
        code, out, _ = _run(capsys, "parseval", "--input", inp, "--method", method)
        obj = json.loads(out)
        assert code == 0 and obj["method"] == method and obj["rel_err"] < 1e-6
        assert len(obj["lhs"]) == 2 and len(obj["rhs"]) == 2
    big = _write(tmp_path / "b.json", {"d": 4, "eigenvalues": [0, 0, 0, 0], "atoms": []})
    code, _, err = _run(capsys, "parseval", "--input", big)
    assert code == 2 and "d <= 3" in err


def test_cylinder_command(tmp_path, capsys):
    inp = _write(tmp_path / "c.json", {"horizon": 1.0, "times": [0.25, 0.5], "atoms": [{"y": [1.0, -0.5], "w": [1, 0]}]})
    code, out, _ = _run(capsys, "cylinder", "--p", 2, "--alpha", "-0.5,0", "--input", inp)
    fourier = json.loads(out)
    code2, out2, _ = _run(capsys, "cylinder", "--p", 2, "--alpha", "-0.5,0", "--input", inp, "--method", "quadrature")
    assert code == code2 == 0
    assert complex(*fourier["value"]) == pytest.approx(complex(*json.loads(out2)["value"]), abs=1e-9)
    assert fourier["within_bound"]
    code, _, err = _run(capsys, "cylinder", "--p", 3, "--alpha", "0,1", "--input", inp, "--method", "quadrature")
    assert code == 1 and "NotIntegrable" in err


def test_check_report_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(capsys, "check", "--out", a)[0] == 0
    assert _run(capsys, "check", "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    obj = json.loads(a.read_text(encoding="utf-8"))
    assert obj["seed"] == checks.DEFAULT_SEED and obj["overall"] == "pass"
    assert checks.CheckReport.from_dict(obj).to_dict() == obj


def test_check_report_overall_verdict():
    rep = checks.CheckReport(1)
    rep.add("a", 0.1, 1.0)
    assert rep.passed
    rep.add("b", 2.0, 1.0)
    assert not rep.passed and rep.to_dict()["overall"] == "fail"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pseudopath", "tvgrowth", "--p", "2", "--alpha", "-1,0",
                          "--t", "1", "--n", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["n"] == 2
