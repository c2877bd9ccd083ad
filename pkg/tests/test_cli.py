import json
import subprocess
import sys

import pytest

from humeyer.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


# --- gen-coeffs -----------------------------------------------------------------------


def test_gen_coeffs_json(capsys):
    d = run_json(capsys, "gen-coeffs", "--basis", "legendre", "--k", "2", "--weights", "0,0", "--p", "2", "--interval", "0,1")
    assert d["p"] == 2 and d["layout"] == "j1-fastest" and len(d["data"]) == 9
    assert d["data"][0] == pytest.approx(0.5, abs=1e-15)
    # C_{10} = -C_{01} = -sqrt(3)/6 for the unit-interval double integral
    assert d["data"][1] == pytest.approx(-(3**0.5) / 6, abs=1e-15)
    assert d["data"][3] == pytest.approx(3**0.5 / 6, abs=1e-15)


def test_gen_coeffs_csv(capsys):
    code, out, _ = run(capsys, "gen-coeffs", "--k", "2", "--p", "1", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "j1,j2,value" and len(lines) == 5
    assert lines[2].startswith("1,0,")


def test_gen_coeffs_capacity(capsys):
    code, _, err = run(capsys, "gen-coeffs", "--k", "3", "--p", "300")
    assert code == 2
    assert json.loads(err)["error"] == "capacity" and "capacity" in json.loads(err)["message"]


def test_gen_coeffs_max_entries_flag(capsys):
    code, _, _ = run(capsys, "gen-coeffs", "--k", "2", "--p", "3", "--max-entries", "10")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["gen-coeffs"],
        ["gen-coeffs", "--k", "3", "--weights", "0,0"],
        ["gen-coeffs", "--k", "2", "--channels", "1,1,1"],
        ["gen-coeffs", "--k", "2", "--interval", "1,0"],
        ["gen-coeffs", "--k", "2", "--p", "-1"],
        ["check-condition", "--k", "3", "--pairs", "1-2,2-3"],
    ],
)
def test_config_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "config"


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen-coeffs", "--bogus"])
    assert exc.value.code == 2


# --- check-condition -------------------------------------------------------------------


def test_check_condition_legendre_zero(capsys):
    code, out, _ = run(capsys, "check-condition", "--k", "2", "--p-list", "0,1,2,4,8", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "p,residual,partition"
    assert all(float(line.split(",")[1]) == 0.0 for line in lines[1:-1])
    assert lines[-1] == "# decreasing below tol: yes"


def test_check_condition_trigonometric_k2(capsys):
    # F_j(T) = 0 for every nonconstant trigonometric function, so the k = 2
    # residual vanishes at every truncation
    d = run_json(capsys, "check-condition", "--k", "2", "--basis", "trigonometric", "--p-list", "1,2,4,8,16")
    assert all(abs(v["residual"]) < 1e-14 for v in d["values"])
    assert d["verdict"] == "decreasing below tol: yes"


def test_check_condition_k4_nonadjacent(capsys):
    d = run_json(capsys, "check-condition", "--k", "4", "--pairs", "1-3,2-4", "--p-list", "0,1,2,3,4,5,6")
    res = [v["residual"] for v in d["values"]]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert d["strictly_decreasing"] and d["partition"]


def test_check_condition_verdict_no(capsys):
    code, out, _ = run(capsys, "check-condition", "--k", "4", "--pairs", "1-3,2-4", "--p-list", "0,1", "--tol", "1e-9", "--format", "csv")
    assert code == 0 and out.strip().splitlines()[-1] == "# decreasing below tol: no"


# --- expand / decompose / convert / mc-compare ----------------------------------------------


def test_expand(capsys):
    d = run_json(capsys, "expand", "--k", "2", "--channels", "1,1", "--p", "3", "--seed", "5")
    assert d["seed"] == 5
    assert d["stratonovich"] - d["ito"] == pytest.approx(0.5, abs=1e-13)


def test_decompose(capsys):
    d = run_json(capsys, "decompose", "--k", "2", "--channels", "1,1", "--p", "0", "--seed", "2")
    assert len(d["terms"]) == 1 and d["terms"][0]["active"]
    assert d["total"] == pytest.approx(d["base"] + d["terms"][0]["value"], rel=1e-15)
    assert d["total"] == pytest.approx(d["stratonovich"], rel=1e-10)
    assert d["seed"] == 2


def test_decompose_trace_source(capsys):
    d = run_json(capsys, "decompose", "--k", "2", "--channels", "1,1", "--p", "2", "--trace-source", "breve")
    assert d["terms"][0]["value"] == 0.0 and d["total"] == d["base"]


@pytest.mark.parametrize("direction", ["ito_to_strat", "strat_to_ito"])
def test_convert(capsys, direction):
    d = run_json(capsys, "convert", "--weights", "1,0,2", "--channels", "1,1,2", "--m", "2", "--p", "3", "--direction", direction)
    assert d["round_trip_error"] <= 1e-10
    assert d["direction"] == direction


def test_mc_compare(capsys):
    d = run_json(capsys, "mc-compare", "--k", "2", "--channels", "1,2", "--p", "4", "--N", "64", "--paths", "300", "--seed", "1")
    for key in ("estimator", "paths", "N", "mean", "ci95", "parseval_tail", "discrete_prediction"):
        assert key in d
    assert d["paths"] == 300 and d["N"] == 64
    assert abs(d["mean"] - d["discrete_prediction"]) < 4 * d["ci95"]


def test_mc_compare_capacity(capsys):
    code, _, err = run(capsys, "mc-compare", "--k", "5", "--p", "0", "--N", "4", "--paths", "2")
    assert code == 2 and json.loads(err)["error"] == "capacity"


def test_mc_compare_workers_identical(capsys):
    argv = ["mc-compare", "--k", "2", "--channels", "1,1", "--p", "2", "--N", "32", "--paths", "250"]
    assert run(capsys, *argv, "--workers", "1")[1] == run(capsys, *argv, "--workers", "3")[1]


# --- config, output, determinism -----------------------------------------------------------


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"k": 2, "channels": [1, 1], "p": 1, "seed": 9}))
    d = run_json(capsys, "expand", "--config", str(cfg))
    assert d["seed"] == 9 and d["p"] == 1
    d = run_json(capsys, "expand", "--config", str(cfg), "--seed", "4")
    assert d["seed"] == 4


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 2, "colour": "red"}))
    assert run(capsys, "expand", "--config", str(bad))[0] == 2
    assert run(capsys, "expand", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HUMEYER_OUTPUT_DIR", str(tmp_path / "out"))
    code, out, _ = run(capsys, "gen-coeffs", "--k", "2", "--p", "1", "--format", "csv")
    assert code == 0 and out == ""
    assert (tmp_path / "out" / "gen-coeffs.csv").read_text().startswith("j1,j2,value")


def test_output_flag_wins(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HUMEYER_OUTPUT_DIR", str(tmp_path / "env"))
    target = tmp_path / "explicit.json"
    assert run(capsys, "gen-coeffs", "--k", "1", "--p", "0", "--output", str(target))[0] == 0
    assert json.loads(target.read_text())["k"] == 1
    assert not (tmp_path / "env").exists()


def test_csv_view_of_json_report(capsys):
    code, out, _ = run(capsys, "expand", "--k", "2", "--p", "1", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "key,value"


def test_module_entry_point_is_byte_stable():
    argv = [sys.executable, "-m", "humeyer", "decompose", "--k", "3", "--channels", "1,1,1", "--p", "2", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["seed"] == 7
