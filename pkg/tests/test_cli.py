import json
import subprocess
import sys

import pytest

from avgeom.cli import dumps, main
from avgeom.config import JobConfig, build_config, load_file
from avgeom.errors import ConfigError


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_average_report(capsys):
    code, out, _ = run(["average", "--metric", "randers-flat", "--b", "0.2,0", "--x", "0,0", "--order", "256",
                        "--format", "jsonl"], capsys)
    assert code == 0
    (rep,) = records(out)
    res = rep["results"]
    assert res["volume"] == pytest.approx(6.331369272632452, rel=1e-12)
    assert res["averaged_metric"][0][0] == pytest.approx(1.0172573794, rel=1e-9)
    assert res["averaged_metric"][1][1] == pytest.approx(0.9923976078, rel=1e-9)
    assert max(abs(v) for row in res["averaged_connection"] for r in row for v in r) == 0.0
    assert "timing" not in rep
    # full effective config is echoed, defaults included
    assert set(rep["config"]) == set(JobConfig().as_dict())
    assert rep["config"]["tol_riemannian"] == 1e-6


def test_classify_euclidean(capsys):
    code, out, _ = run(["classify", "--metric", "euclidean", "--x", "0,0", "--format", "jsonl", "--order", "32"], capsys)
    res = records(out)[0]["results"]
    assert code == 0 and res["riemannian"] and res["berwald"]


def test_ode_average_bound(capsys):
    code, out, _ = run(["ode-average", "--k", "1", "--omega", "1", "--g", "sin(phi1)", "--eps", "0.05",
                        "--t-end", "20", "--format", "jsonl"], capsys)
    assert code == 0
    assert records(out)[0]["results"]["sup_error"][0] <= 0.1


def test_ode_sweep_csv(capsys):
    code, out, _ = run(["ode-average", "--g", "sin(phi1)", "--eps", "0.1,0.05", "--format", "csv"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "eps,t_end,dt,sup_error,error_over_eps" and len(lines) == 3


def test_fiber_integrate(capsys):
    code, out, _ = run(["fiber-integrate", "--expr", "x1^2*exp(-t1^2)", "--x", "2", "--format", "jsonl"], capsys)
    res = records(out)[0]["results"]
    assert code == 0
    assert res["integral"] == pytest.approx(4 * 3.141592653589793**0.5, rel=1e-12)
    assert res["commutation_residual"] <= 1e-6


def test_check_suite_text(capsys):
    code, out, _ = run(["check"], capsys)
    assert code == 0 and "FAIL" not in out and out.count("PASS") == 14


@pytest.mark.parametrize(
    "argv",
    [
        ["average", "--metric", "nope"],
        ["average", "--metric", "euclidean", "--expr", "y1"],
        ["average", "--metric", "randers-flat"],
        ["average", "--expr", "sqrt(y1^2 + y2^2"],
        ["average", "--metric", "euclidean", "--x", "0,0", "--order", "2"],
        ["average", "--metric", "euclidean", "--dim", "4"],
        ["ode-average", "--eps", "0.1"],
        ["ode-average", "--g", "sin(phi2)"],
        ["fiber-integrate", "--expr", "t1", "--base-index", "3"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "config error" in err


def test_bad_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["average", "--format", "xml"])
    assert info.value.code == 2


def test_computation_errors_exit_1(capsys):
    code, _, err = run(["average", "--metric", "quartic-degenerate", "--order", "16"], capsys)
    assert code == 1 and "DegenerateMeasureError" in err
    code, _, err = run(["fiber-integrate", "--expr", "1/(1+t1^2)", "--x", "0"], capsys)
    assert code == 1 and "TruncationError" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "job.toml"
    cfg.write_text('metric = "randers-flat"\nb = [0.2, 0.0]\norder = 32\nformat = "jsonl"\n')
    code, out, _ = run(["average", "--config", str(cfg), "--order", "16"], capsys)
    rep = records(out)[0]
    assert code == 0 and rep["config"]["order"] == 16 and rep["config"]["b"] == [0.2, 0.0]
    nested = tmp_path / "bad.toml"
    nested.write_text("[table]\nmetric = 'euclidean'\n")
    assert run(["average", "--config", str(nested)], capsys)[0] == 2
    assert run(["average", "--config", str(tmp_path / "missing.toml")], capsys)[0] == 2


def test_load_file_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "job.toml"
    cfg.write_text("colour = 3\n")
    with pytest.raises(ConfigError):
        load_file(cfg)
    c = build_config("classify", {"metric": "euclidean"}, {"x": "0,0,0"})
    assert c.dim == 3 and c.probes == 26 and c.order == [32, 64]


def test_out_file(tmp_path, capsys):
    path = tmp_path / "rep.jsonl"
    code, out, _ = run(["average", "--metric", "euclidean", "--order", "8", "--format", "jsonl", "--out", str(path)],
                       capsys)
    assert code == 0 and out == "" and records(path.read_text())[0]["results"]["volume"] > 6


def test_env_default_order(monkeypatch, capsys):
    monkeypatch.setenv("AVGEOM_DEFAULT_ORDER", "12")
    _, out, _ = run(["average", "--metric", "euclidean", "--format", "jsonl"], capsys)
    rep = records(out)[0]
    assert rep["config"]["order"] == 12 and rep["diagnostics"]["nodes"] == 12


def test_dumps_uses_17_digits():
    assert dumps({"a": 0.1}) == '{"a":0.10000000000000001}'
    assert json.loads(dumps({"a": 1 / 3}))["a"] == 1 / 3
    with pytest.raises(ValueError):
        dumps({"a": float("nan")})


def test_byte_identical_runs(tmp_path):
    argv = [sys.executable, "-m", "avgeom.cli", "classify", "--metric", "randers-general", "--b", "0.2,0",
            "--order", "32", "--format", "jsonl", "--seed", "7"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and first.endswith(b"\n")
