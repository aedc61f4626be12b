import json
import math
import os
import subprocess
import sys

import pytest

from solitonlab.cli import main
from solitonlab.serialize import dumps, fmt, profile_csv
from solitonlab.soliton import SolitonProblem, integrate_profile
from solitonlab.speed import MeanCurvature


def run(args, tmp_path=None, env=None):
    """Run the installed entry point in a fresh process; return (code, stdout, stderr)."""
    e = dict(os.environ)
    e.pop("SOLITONLAB_TOL", None)
    if env:
        e.update(env)
    p = subprocess.run([sys.executable, "-m", "solitonlab", *args], capture_output=True, text=True, env=e,
                       cwd=tmp_path)
    return p.returncode, p.stdout, p.stderr


# -- exit code 0 -------------------------------------------------------------

def test_sphere_mean_curvature(capsys):
    assert main(["sphere", "--family", "mean-curvature", "--lambda", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["solutions"][0]["R"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert d["solutions"][0]["center_is_origin"] is True


def test_sphere_gauss_power(capsys):
    assert main(["sphere", "--family", "gauss-power", "--alpha", "0.2", "--lambda", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["solutions"][0]["R"] == pytest.approx(1.0, rel=1e-12)


def test_sphere_rational_exponent(capsys):
    assert main(["sphere", "--family", "power-mean", "--power", "1/3"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["speed"]["params"]["power"] == [1, 3]
    assert d["solutions"][0]["R"] == pytest.approx(2 ** 0.25, rel=1e-12)


def test_solve_sphere_writes_csv_and_report(tmp_path):
    out, rep = tmp_path / "p.csv", tmp_path / "r.json"
    code = main(["solve", "--family", "mean-curvature", "--b", str(math.sqrt(2)), "--x-max", "1.2",
                 "--out", str(out), "--report", str(rep)])
    assert code == 0
    header = json.loads(rep.read_text())
    assert header["termination"] == "ReachedXMax"
    assert header["residual_max"] <= 1e-8
    lines = out.read_text().splitlines()
    assert lines[0] == "x,gamma,gamma_p,gamma_pp,k1,k2,H,K,support,tangential_sq,Q"
    for line in lines[1:]:
        x, g = (float(v) for v in line.split(",")[:2])
        assert g == pytest.approx(math.sqrt(2 - x * x), abs=1e-8)


def test_solve_off_sphere_single_stream(capsys):
    assert main(["solve", "--family", "mean-curvature", "--b", "0.5"]) == 0
    text = capsys.readouterr().out
    comment = "\n".join(l[2:] for l in text.splitlines() if l.startswith("# "))
    header = json.loads(comment)
    assert header["termination"] in ("ReachedXMax", "VerticalTangent", "AxisReturn", "TurningPoint",
                                     "MaxLength")
    assert header["problem"]["b"] == 0.5


def test_solve_weingarten_mode(capsys):
    assert main(["solve", "--family", "power-mean", "--power", "2", "--lambda", "0", "--b", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["mode"] == "weingarten"


def test_pinch_off_sphere(capsys):
    assert main(["pinch", "--family", "mean-curvature", "--lambda", "1", "--b", "0.5"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["sphere_coincident"] is False
    assert abs(d["ftilde_limit"]) > 0.01


def test_verify_sphere(capsys):
    assert main(["verify", "--profile", "sphere", "--R", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["ok"] is True
    assert max(d["defects"].values()) <= 1e-5


def test_verify_ellipsoid_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profile": "ellipsoid", "a": 1.0, "c": 2.0}))
    assert main(["verify", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["name"] == "ellipsoid"


def test_scan_quadratic(tmp_path):
    out, rep = tmp_path / "s.csv", tmp_path / "b.json"
    assert main(["scan", "--family", "quadratic-hk", "--a", "1", "--b", "1", "--out", str(out),
                 "--report", str(rep)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "H,K,indicator,class"
    assert len(lines) == 1 + 200 * 200
    b = json.loads(rep.read_text())
    for H, K in b["boundary"]:
        if K is not None:
            assert abs(K + 6 * H * H) <= b["dK"]


def test_config_speed_object_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"speed": {"family": "mean-curvature", "lambda": 1.0}}))
    assert main(["sphere", "--config", str(cfg), "--lambda", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["solutions"][0]["R"] == pytest.approx(1.0)


def test_shoot_finds_root(capsys):
    assert main(["shoot", "--family", "mean-curvature", "--b-range", "1.2", "1.6"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert abs(d["roots"][0] - math.sqrt(2)) <= 1e-3


# -- exit code 1 -------------------------------------------------------------

def test_malformed_json_config(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{ not json")
    code, _, err = run(["sphere", "--config", str(cfg)])
    assert code == 1
    assert "malformed JSON" in err


def test_missing_b():
    code, _, err = run(["solve", "--family", "mean-curvature"])
    assert code == 1 and "--b" in err


def test_unknown_family_and_usage_errors():
    assert run(["sphere", "--family", "nope"])[0] == 1
    assert run(["frobnicate"])[0] == 1
    assert run([])[0] == 1


def test_missing_parameter():
    code, _, err = run(["sphere", "--family", "gauss-power"])
    assert code == 1 and "alpha" in err


def test_bad_tolerance_environment():
    code, _, err = run(["solve", "--family", "mean-curvature", "--b", "1"], env={"SOLITONLAB_TOL": "abc"})
    assert code == 1 and "SOLITONLAB_TOL" in err


# -- exit code 2 -------------------------------------------------------------

def test_no_sphere_exit_2():
    code, out, _ = run(["sphere", "--family", "power-mean", "--power", "-1", "--lambda", "0.7"])
    assert code == 2
    assert json.loads(out)["solutions"] == []


def test_shoot_without_roots_exit_2():
    code, out, _ = run(["shoot", "--family", "mean-curvature", "--b-range", "0.4", "0.6", "--samples", "3"])
    assert code == 2
    assert json.loads(out)["roots"] == []


# -- exit code 3 -------------------------------------------------------------

def test_step_budget_exhausted_exit_3():
    code, out, err = run(["solve", "--family", "mean-curvature", "--b", "0.5", "--max-steps", "5"])
    assert code == 3 and "MaxSteps" in err


def test_domain_error_exit_3():
    # W = H^2 - 10 K has Psi(1, 0) < 0, so the axis series needs a square root of a negative number
    code, _, err = run(["solve", "--family", "quadratic-hk", "--param", "a=1", "--param", "b=-10", "--b", "1"])
    assert code == 3 and "numerical failure" in err


# -- environment and determinism ---------------------------------------------

def test_environment_tolerance_is_used(tmp_path):
    rep = tmp_path / "r.json"
    code, _, _ = run(["solve", "--family", "mean-curvature", "--b", "1", "--x-max", "1", "--out",
                      str(tmp_path / "p.csv"), "--report", str(rep)], env={"SOLITONLAB_TOL": "1e-6"})
    assert code == 0
    assert json.loads(rep.read_text())["problem"]["tol"] == 1e-6


@pytest.mark.parametrize("args", [
    ["solve", "--family", "mean-curvature", "--b", "0.8"],
    ["pinch", "--family", "gauss-power", "--alpha", "1", "--b", "0.7"],
    ["scan", "--family", "norm-a-squared", "--nH", "30", "--nK", "30"],
    ["sphere", "--family", "harmonic-mean-power", "--m", "1", "--n", "2"],
    ["verify", "--profile", "cylinder", "--r", "2"],
], ids=lambda a: a[0])
def test_repeated_runs_are_byte_identical(args):
    first = run(args)
    second = run(args)
    assert first[0] == 0
    assert first[1] == second[1]


def test_failed_runs_are_byte_identical_too():
    # |A|^2 >= 0 cannot balance a positive support; the run stops with RootFindFailed
    args = ["solve", "--family", "norm-a-squared", "--b", "1.0"]
    first, second = run(args), run(args)
    assert first[0] == 3
    assert first == second


def test_csv_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(None) == ""
    rep = integrate_profile(SolitonProblem(speed=MeanCurvature(), b=1.0, x_max=0.5))
    text = profile_csv(rep.profile.jets)
    assert "\r" not in text and text.endswith("\n")
    assert dumps({"b": float("inf"), "a": float("nan")}) == '{\n  "a": "nan",\n  "b": "inf"\n}\n'
