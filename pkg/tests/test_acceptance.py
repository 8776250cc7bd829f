"""Acceptance gate: one test and one PASS/FAIL line per criterion.

Tolerances and runtime limits are pinned here and re-checked against the
details each runner reports.
"""

import subprocess
import sys

import pytest

from gamma_stab.acceptance import run_criterion

RIESZ_SAMPLES = 100_000
STAT_SIGMAS = 3.0

LIMITS = {1: 5.0, 2: 10.0, 3: 60.0, 5: 60.0, 7: 10.0, 10: 120.0}


def _check_details(n, d):
    if n == 1:
        assert d["abs_err_f_function"] <= 1e-6
        assert d["rel_err_gram"] <= 0.02
    elif n == 2:
        assert d["relative_error"]["f_function_infimum"] <= 0.02
        assert d["sizes"][-1] == 400
        assert d["monotone_from_above"] and d["discrepancy_flag"]
    elif n == 3:
        assert d["instances"] == 100 and d["samples"] == RIESZ_SAMPLES
        assert d["violations"] == {"l2": 0, "lp4": 0}
    elif n == 4:
        assert d["instances"] == 50 and d["max_z"] <= STAT_SIGMAS
        assert abs(d["stderr_ratio_4x"] / 2 - 1) <= 0.2
    elif n == 5:
        assert d["systems"] == 20 and d["deltas"] == [0.05, 0.1, 0.5, 1.0]
        assert d["max_ratio_to_bound"] <= 1.0
    elif n == 6:
        assert d["max_eps0_over_abs_s"] <= 1.0
        assert all(v["err"] <= 1e-12 for v in d["scalar"].values())
    elif n == 7:
        assert d["grid_points"] == 100 and d["max_rel_err"] < 1e-8
    elif n == 8:
        assert d["max_rel_err"] <= 1e-6 and d["scalar_Q"] == pytest.approx(0.5, abs=1e-14)
    elif n == 9:
        assert d["instances"] == 20 and d["max_rel_diff"] <= 1e-6 and d["scalar_err"] <= 1e-8
    elif n == 10:
        assert d["instances_l2"] == 50 and d["failures_l2"] == 0 and d["failures_lp4"] == 0
        assert d["max_contraction"] < 1.0
        assert all(v["rel_err"] <= 1e-14 for v in d["scalar_margin"].values())
    elif n == 11:
        assert d["systems"] == 20 and d["failures"] == 0 and d["min_epsilon"] > 0
        assert all(d["refused_unstable"])


@pytest.mark.parametrize("n", list(range(1, 12)))
def test_criterion(n, record_criterion):
    res = run_criterion(n, seed=0)
    if n in LIMITS:
        res.limit_s = LIMITS[n]
    record_criterion(res.line())
    assert res.passed, res.details
    _check_details(n, res.details)
    assert res.within_time, f"runtime {res.runtime_s:.1f} s over {res.limit_s} s"


def test_criterion_12_verify_is_deterministic(tmp_path, record_criterion):
    outs = []
    for k in range(2):
        out = tmp_path / f"verify{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "gamma_stab.cli", "verify", "--out", str(out), "--seed", "0"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode in (0, 2), proc.stderr
        outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    status = "PASS" if same else "FAIL"
    record_criterion(f"[{status}] criterion 12: verify reports are byte-identical for equal seeds")
    assert same
