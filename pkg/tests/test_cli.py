import json
import math
import subprocess
import sys

import pytest

from gamma_stab import cli
from gamma_stab.semigroup import C_UNIV


def write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj), encoding="utf-8")
    return str(p)


def run(tmp_path, sub, spec, *extra):
    out = tmp_path / "report.json"
    code = cli.run([sub, "--spec", write(tmp_path, spec), "--out", str(out), *extra])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_scalar_invariant_measure(tmp_path):
    spec = {"A": [-1], "B": [1], "analyses": ["invariant_measure"]}
    code, rep = run(tmp_path, "scp", spec)
    assert code == 0
    out = rep["results"][0]["output"]
    assert out["exists"] is True
    assert out["covariance_Q"] == [[0.5]]
    assert rep["spec"] == spec
    assert rep["constants"]["C_univ"] == {"formula": "2*pi*e^{2pi}/(e^{2pi}-1)", "value": C_UNIV}


def test_rotation_stability_fails_with_report(tmp_path):
    code, rep = run(tmp_path, "stability", {"A": [[0, -1], [1, 0]], "analyses": ["stability"]})
    assert code == 2
    res = rep["results"][0]
    assert res["status"] == "failed" and res["error"]["type"] == "NotStable"
    assert "s(A) = 0" in res["error"]["message"]
    assert rep["passed"] is False


def test_malformed_json(tmp_path, capsys):
    code, rep = run(tmp_path, "scp", '{"A": [[0, -1], [1, 0]')
    assert code == 1 and rep is None
    err = capsys.readouterr().err
    assert "parse error" in err and "spec.json:1:23:" in err


@pytest.mark.parametrize(
    "spec",
    [
        {"A": [[-1, 0], [0, -1]], "B": [[1], [1], [1]]},
        {"m": 3, "A": [[-1, 0], [0, -1]], "B": [[1], [1]]},
        {"A": [[-1, 0]], "B": [1]},
        {"A": [-1], "B": [1], "space": {"norm": "lp", "p": 0.5}},
        {"A": [-1], "B": [1], "mc": {"samples": 0}},
        {"A": [-1], "B": [1], "analyses": ["no_such_analysis"]},
        {"A": [-1], "B": [1], "analyses": [{"name": "perturbation"}]},
        {"A": [[-1, [0, 1, 2]], [0, -1]], "B": [1, 1]},
        {"A": [-1]},
        {"A": [-1], "B": [1], "extra": 1},
    ],
)
def test_validation_errors_write_nothing(tmp_path, spec):
    code, rep = run(tmp_path, "scp", spec)
    assert code == 1 and rep is None


def test_complex_entries_and_lp_space(tmp_path):
    spec = {
        "m": 2,
        "d": 1,
        "A": [[[-1, 1], 0.5], [0, -2]],
        "B": [[1], [[0, 1]]],
        "space": {"norm": "lp", "p": 4},
        "mc": {"samples": 5000, "seed": 3},
        "analyses": ["invariant_measure", {"name": "solution", "T": 2.0}],
    }
    code, rep = run(tmp_path, "scp", spec)
    assert code == 0
    out = rep["results"][0]["output"]
    assert out["gamma_norm_orbit"]["method"] == "monte-carlo"
    assert out["gamma_norm_orbit"]["samples"] == 5000
    assert rep["settings"]["seed"] == 3


def test_same_seed_reproduces_numbers(tmp_path):
    spec = {"A": [[-1, 0.5], [0, -2]], "B": [[1], [0.3]], "space": {"norm": "lp", "p": 3},
            "mc": {"samples": 4000, "seed": 9}, "analyses": ["invariant_measure", "transform_norm"]}
    _, a = run(tmp_path, "scp", spec)
    _, b = run(tmp_path, "scp", spec)
    for r in a["results"] + b["results"]:
        r.pop("wall_clock_s")
    assert a == b
    _, c = run(tmp_path, "scp", spec, "--seed", "10")
    assert c["results"][0]["output"]["gamma_norm_orbit"] != a["results"][0]["output"]["gamma_norm_orbit"]


def test_frames_subcommand(tmp_path):
    code, rep = run(tmp_path, "frames", {"analyses": [{"name": "frame_constants", "a": 0.5}, "bessel_adjudication"]})
    assert code == 0
    fc = rep["results"][0]["output"]
    assert fc["f_function"]["hilbert_sq"] == pytest.approx(math.e / (math.e - 1), abs=1e-6)
    adj = rep["results"][1]["output"]
    assert adj["selected"] == "f_function_infimum" and adj["discrepancy_flag"] is True


def test_stability_pipeline(tmp_path):
    spec = {"A": [[-1, 2], [0, -0.5]], "analyses": ["spectral_abscissa", "orbit_bound", {"name": "laplace_check", "delta": 0.5},
                                                  "certificate", "neumann", "datko_pazy"]}
    code, rep = run(tmp_path, "stability", spec)
    assert code == 0, rep
    assert all(r["passed"] for r in rep["results"])


def test_scp_perturbations(tmp_path):
    spec = {"A": [-1], "B": [1], "analyses": [{"name": "perturbation", "P": [0.5]}, {"name": "solution_perturbation", "P": [10], "T": 1.0},
                                              "perturbation_margin", "transform_norm"]}
    code, rep = run(tmp_path, "scp", spec)
    assert code == 0
    assert rep["results"][0]["output"]["contraction_C"] == pytest.approx(0.5)
    assert rep["results"][2]["output"]["delta"] == pytest.approx(1.0)


def test_margin_exceeded_is_analysis_failure(tmp_path):
    code, rep = run(tmp_path, "scp", {"A": [-1], "B": [1], "analyses": [{"name": "perturbation", "P": [2.0]}]})
    assert code == 2
    assert rep["results"][0]["error"]["type"] == "MarginExceeded"


def test_console_script(tmp_path):
    spec = write(tmp_path, {"A": [-2], "B": [1], "analyses": ["invariant_measure"]})
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "gamma_stab.cli", "scp", "--spec", spec, "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["results"][0]["output"]["covariance_Q"] == [[0.25]]
