from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from nonlocal_logistic import ConfigurationError, SolverError
from nonlocal_logistic import cli
from nonlocal_logistic.config import load_config, parse_config, tomllib
from nonlocal_logistic.continuation import ContinuationSettings
from nonlocal_logistic.driver import (
    CSV_COLUMNS,
    POSITIVE,
    THREADS_ENV,
    ZERO,
    run_branch,
    run_direction,
    run_eig,
    run_hypotheses,
    run_verify,
    sweep_threads,
    to_json,
)

from conftest import SCENARIOS


def _cfg(name="symmetric-1d", **changes):
    cfg = load_config(SCENARIOS[name])
    return replace(cfg, **changes) if changes else cfg


# ------------------------------------------------------------------ eig


def test_eig_symmetric_values():
    rep = run_eig(_cfg())
    h = math.pi / 129
    lam = 4 / h**2 * math.sin(h / 2) ** 2
    assert rep["lambda1"] == pytest.approx(lam, rel=1e-10)
    assert rep["lambda_A"] == pytest.approx(3, rel=1e-14)
    assert rep["t1"] == pytest.approx(lam / 3, rel=1e-10)
    assert rep["threshold_eigenvalue"] == "lambda1"
    assert rep["dense_check"]["lambda1"]["relative_difference"] <= 1e-8


def test_eig_advected_uses_advection_operator():
    rep = run_eig(_cfg("advected-1d"))
    assert rep["threshold_eigenvalue"] == "lambda1_alpha"
    # a constant drift raises the Dirichlet eigenvalue by about |alpha|^2 / 4
    assert rep["lambda1_alpha"] - rep["lambda1"] == pytest.approx(0.25, rel=1e-3)
    assert rep["t1"] == pytest.approx(rep["lambda1_alpha"] / rep["lambda_A"], rel=1e-14)


def test_eig_power_mode_ignores_advection():
    rep = run_eig(_cfg("power-1d"))
    assert rep["threshold_eigenvalue"] == "lambda1"
    assert rep["t1"] == pytest.approx(rep["lambda1"] / rep["lambda_A"], rel=1e-14)


# ------------------------------------------------------------------ verify


def test_verify_symmetric_passes():
    rep = run_verify(_cfg(), threads=1)
    assert rep.passed and rep.failures == []
    x = np.arange(1, 129) * math.pi / 129
    for s in rep.sweep:
        assert s.outcome == (ZERO if s.multiplier < 1 else POSITIVE)
        if s.outcome == POSITIVE:
            # the discrete branch is u = v = c sin(x_j) with c h sum(sin x_j) = 3t - lambda1
            c = (3 * s.t - rep.lambda1) / (math.pi / 129 * np.sum(np.sin(x)))
            assert s.amplitude == pytest.approx(2 * c * np.max(np.sin(x)), rel=1e-8)
    assert rep.t_one.outcome == POSITIVE and rep.t_one_consistent
    assert rep.hypotheses["passed"]


def test_verify_without_multipliers_reports_threshold_only():
    rep = run_verify(_cfg(multipliers=(), check_t_one=False), threads=1, with_hypotheses=False)
    assert rep.passed and rep.sweep == [] and rep.t_one is None
    assert rep.hypotheses is None


def test_verify_unreachable_tolerance_fails():
    rep = run_verify(_cfg(multipliers=(1.5,), check_t_one=False, newton_tol=1e-300), threads=1,
                     with_hypotheses=False)
    # only the exact zero state meets a tolerance of 1e-300
    assert not rep.passed
    assert rep.sweep[0].outcome in ("no-convergence", ZERO)
    assert "expected positive" in rep.failures[0]


def test_verify_thread_count_does_not_change_results():
    cfg = _cfg(multipliers=(0.8, 1.2, 1.5))
    a = run_verify(cfg, threads=1, with_hypotheses=False).as_dict()
    b = run_verify(cfg, threads=3, with_hypotheses=False).as_dict()
    assert to_json(a) == to_json(b)


def test_sweep_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert sweep_threads() == 3
    monkeypatch.delenv(THREADS_ENV)
    assert sweep_threads() >= 1
    for bad in ("0", "-2", "many"):
        monkeypatch.setenv(THREADS_ENV, bad)
        with pytest.raises(ConfigurationError, match=THREADS_ENV):
            sweep_threads()


# ------------------------------------------------------------------ branch / direction


def test_branch_csv_format():
    settings = ContinuationSettings(initial_epsilon=0.01, step=0.02, max_points=2)
    branch, text, summary = run_branch(_cfg(continuation=settings))
    assert "\r" not in text and text.endswith("\n")
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[-1].startswith("# stop:")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:-1]))))
    assert len(rows) == 2 == summary["points"]
    for row, pt in zip(rows, branch.points):
        assert float(row[1]) == pt.t  # %.17g round-trips exactly
        assert len(row) == len(CSV_COLUMNS)
    assert summary["points_below_t1"] == 0


def test_direction_summary_text():
    rep, text, branch = run_direction(_cfg("case6-shear"))
    assert "direction: subcritical" in text
    assert "matched: alt-sign" in text
    assert "positive solutions below t1: yes" in text
    assert rep.verdict == "alt-sign-consistent"
    rep, text, _ = run_direction(_cfg("symmetric-1d"))
    assert "direction: supercritical" in text and "verdict: formula-consistent" in text


# ------------------------------------------------------------------ hypotheses


def test_hypotheses_pass_on_symmetric():
    rep = run_hypotheses(_cfg())
    assert rep["passed"]
    names = [c["name"] for c in rep["checks"]]
    assert names[:3] == ["mode-constraints", "K1-class", "K2-class"]
    assert "alpha-identity" in names and "beta-identity" in names


def test_hypotheses_zero_kernel_fails_class():
    doc = tomllib.loads(SCENARIOS["symmetric-1d"].read_text())
    doc["K2"]["params"] = [0]
    rep = run_hypotheses(parse_config(doc, kind="hypotheses"))
    status = {c["name"]: c["passed"] for c in rep["checks"]}
    assert not rep["passed"] and not status["K2-class"] and status["K1-class"]


def test_hypotheses_linear_shear_fails_mode_constraints():
    doc = tomllib.loads(SCENARIOS["symmetric-1d"].read_text())
    doc["alpha"] = doc["beta"] = {"kind": "shear", "params": [1.0]}
    rep = run_hypotheses(parse_config(doc, kind="hypotheses"))
    first = rep["checks"][0]
    assert first["name"] == "mode-constraints" and not first["passed"]
    assert first["violations"][0]["field"] == "alpha"


def test_identity_scenario_hypotheses():
    rep = run_hypotheses(_cfg("identity-2d"))
    checks = {c["name"]: c for c in rep["checks"]}
    assert abs(checks["alpha-identity"]["value"]) <= 5e-3
    assert abs(checks["beta-identity"]["value"]) <= 5e-3


# ------------------------------------------------------------------ serialization


def test_json_is_deterministic_and_strict():
    rep = run_eig(_cfg())
    text = to_json(rep)
    assert text == to_json(run_eig(_cfg()))
    assert list(json.loads(text)) == list(rep)
    assert to_json({"x": float("nan"), "y": np.float64(0.1)}) == '{\n  "x": "nan",\n  "y": 0.1\n}\n'


# ------------------------------------------------------------------ cli


def _run(argv):
    return cli.main([str(a) for a in argv])


def test_cli_eig_writes_json(tmp_path, capsys):
    assert _run(["eig", "--config", SCENARIOS["symmetric-1d"], "--out", tmp_path]) == 0
    data = json.loads((tmp_path / "symmetric-1d.eig.json").read_text())
    assert data["t1"] == pytest.approx(1 / 3, rel=1e-4)
    assert "t1 =" in capsys.readouterr().out


def test_cli_branch_and_direction_outputs(tmp_path):
    assert _run(["branch", "--config", SCENARIOS["case1-gaussian"], "--out", tmp_path]) == 0
    assert (tmp_path / "case1-gaussian.branch.csv").read_text().startswith("epsilon,t,")
    assert _run(["direction", "--config", SCENARIOS["case6-shear"], "--out", tmp_path]) == 0
    assert "alt-sign" in (tmp_path / "case6-shear.direction.txt").read_text()


def test_cli_config_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    text = SCENARIOS["symmetric-1d"].read_text().replace("b = 1\n", "b = -1\n", 1)
    bad.write_text(text)
    assert _run(["eig", "--config", bad, "--out", tmp_path]) == 3
    assert "A.b" in capsys.readouterr().err
    broken = tmp_path / "broken.toml"
    broken.write_text("[run\n")
    assert _run(["verify", "--config", broken, "--out", tmp_path]) == 3


def test_cli_verdict_fail_exits_2(tmp_path):
    bad = tmp_path / "zero-kernel.toml"
    text = SCENARIOS["symmetric-1d"].read_text()
    text = text.replace('[K2]\nkind = "constant"\nparams = [1]', '[K2]\nkind = "constant"\nparams = [0]')
    bad.write_text(text)
    assert _run(["hypotheses", "--config", bad, "--out", tmp_path]) == 2
    report = json.loads((tmp_path / "symmetric-1d.hypotheses.json").read_text())
    assert not report["passed"]


def test_cli_solver_fault_exits_4(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise SolverError("singular", condition=1e17)

    monkeypatch.setattr(cli, "run_eig", boom)
    assert _run(["eig", "--config", SCENARIOS["symmetric-1d"], "--out", tmp_path]) == 4
    assert "solver fault" in capsys.readouterr().err


def test_cli_argument_validation():
    for argv in (["eig"], ["eig", "--config", "x", "--seed", "-1"], ["eig", "--config", "x", "--mesh-scale", "0"],
                 ["eig", "--config", "x", "--seed", str(2**64)]):
        with pytest.raises(SystemExit) as info:
            cli.main(argv)
        assert info.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nonlocal_logistic", "eig", "--config", str(SCENARIOS["weak-coupling-1d"]),
         "--out", str(tmp_path), "--seed", "0x10"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "weak-coupling-1d.eig.json").exists()
