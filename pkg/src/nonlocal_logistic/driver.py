"""Scenario runs: eigen-data, threshold sweeps, branches, directions and hypothesis checks.

Every ``run_*`` function takes a :class:`~nonlocal_logistic.config.ScenarioConfig`
and returns plain data; :func:`write_json` and :func:`branch_csv` turn results
into the on-disk artifacts.  Outputs depend only on the config and its seed.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .config import ScenarioConfig
from .continuation import (
    Branch,
    bifurcation_seed,
    continue_branch,
    galerkin_amplitude,
)
from .direction import DirectionReport, direction_report, eta_limit
from .errors import ConfigurationError, DomainError, SolverError
from .geometry import advection_identity_residual
from .nonlocal_terms import (
    check_kernel_class,
    check_phi_bound,
    kernel_quadratic_form,
    derivative_defect,
    homogeneity_defect,
    kernel_matrix,
    lower_bound_margin,
)
from .spectral import assemble_operator, coupling_eigen, principal_eigenpair
from .system import LINEAR, ProblemSpec, State, newton_solve, residual

__all__ = [
    "THREADS_ENV",
    "ZERO_TOL",
    "SweepOutcome",
    "VerificationReport",
    "sweep_threads",
    "run_eig",
    "run_verify",
    "run_branch",
    "run_direction",
    "run_hypotheses",
    "branch_csv",
    "to_json",
    "write_json",
]

THREADS_ENV = "NONLOCAL_BRANCH_THREADS"
ZERO_TOL = 1e-8
CSV_COLUMNS = ("epsilon", "t", "amplitude", "min_u", "min_v", "residual_norm", "rho_norm")

ZERO = "zero"
POSITIVE = "positive"
NONPOSITIVE = "nonpositive"
NO_CONVERGENCE = "no-convergence"
FAULT = "solver-fault"


# ---------------------------------------------------------------- serialization


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def to_json(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, ``repr`` floats, trailing LF."""
    return json.dumps(_plain(obj), indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(to_json(obj))
    return path


def _g17(x: float) -> str:
    return "%.17g" % x


def branch_csv(branch: Branch) -> str:
    """CSV text for a branch; the stop reason goes in a trailing ``#`` line."""
    lines = [",".join(CSV_COLUMNS)]
    for p in branch.points:
        row = (p.epsilon, p.t, p.amplitude, p.min_u, p.min_v, p.residual_norm, p.rho_norm)
        lines.append(",".join(_g17(v) for v in row))
    lines.append(f"# stop: {branch.stop_reason or 'none'}; direction: {branch.direction}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- eigen-data


def _threshold_label(spec: ProblemSpec) -> str:
    if spec.mode == LINEAR and np.any(spec.alpha.max_abs(spec.grid) > 0):
        return "lambda1_alpha"
    return "lambda1"


def run_eig(cfg: ScenarioConfig, tol: float = 1e-10, dense_limit: int = 1500) -> dict:
    """Principal eigenvalues, coupling eigen-data and ``t1``.

    When the grid has at most ``dense_limit`` unknowns the iterative result is
    cross-checked against a dense eigensolve.
    """
    spec = cfg.spec
    grid = spec.grid
    lap = principal_eigenpair(assemble_operator(grid), tol)
    out = {
        "name": cfg.name,
        "mode": spec.mode,
        "grid": {"dim": grid.dim, "bounds": [list(b) for b in grid.bounds], "n": list(grid.n)},
        "lambda1": lap.lambda_,
        "lambda1_iterations": lap.iterations,
        "lambda1_residual": lap.residual,
    }
    ops = [("lambda1", assemble_operator(grid), lap.lambda_)]
    if np.any(spec.alpha.max_abs(grid) > 0):
        adv_op = assemble_operator(grid, spec.alpha)
        adv = principal_eigenpair(adv_op, tol)
        out["lambda1_alpha"] = adv.lambda_
        out["lambda1_alpha_iterations"] = adv.iterations
        ops.append(("lambda1_alpha", adv_op, adv.lambda_))
    me = coupling_eigen(spec.A)
    label = _threshold_label(spec)
    out.update(
        {
            "lambda_A": me.lambda_A,
            "z": me.z,
            "zeta": me.zeta,
            "sigma": me.sigma,
            "b_hat": me.b_hat,
            "threshold_eigenvalue": label,
            "t1": out[label] / me.lambda_A,
        }
    )
    if grid.size <= dense_limit:
        check = {}
        for name, op, lam in ops:
            ev = sla.eigvals(op.matrix.toarray())
            ref = float(np.min(ev.real))
            check[name] = {"dense": ref, "relative_difference": abs(lam - ref) / abs(ref)}
        out["dense_check"] = check
    return out


# ---------------------------------------------------------------- verify


@dataclass
class SweepOutcome:
    multiplier: float
    t: float
    outcome: str
    amplitude: float = 0.0
    residual_norm: float = float("nan")
    margin: float = float("nan")
    attempts: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "multiplier": self.multiplier,
            "t": self.t,
            "outcome": self.outcome,
            "amplitude": self.amplitude,
            "residual_norm": self.residual_norm,
            "margin": self.margin,
            "attempts": self.attempts,
        }


@dataclass
class VerificationReport:
    name: str
    mode: str
    threshold_eigenvalue: str
    lambda1: float
    lambda_A: float
    t1: float
    sweep: list[SweepOutcome] = field(default_factory=list)
    t_one: SweepOutcome | None = None
    t_one_expected: str | None = None
    t_one_consistent: bool | None = None
    hypotheses: dict | None = None
    direction: dict | None = None
    verdict: str = "pass"
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "threshold_eigenvalue": self.threshold_eigenvalue,
            self.threshold_eigenvalue: self.lambda1,
            "lambda_A": self.lambda_A,
            "t1": self.t1,
            "sweep": [s.as_dict() for s in self.sweep],
            "t_one": self.t_one.as_dict() if self.t_one else None,
            "t_one_expected": self.t_one_expected,
            "t_one_consistent": self.t_one_consistent,
            "hypotheses": self.hypotheses,
            "direction": self.direction,
            "verdict": self.verdict,
            "failures": self.failures,
        }


def sweep_threads() -> int:
    """Worker count for sweeps: ``NONLOCAL_BRANCH_THREADS`` or the CPU count."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigurationError(f"must be a positive integer, got {raw!r}", THREADS_ENV)
    return n


def _classify(U: State, converged: bool) -> tuple[str, float]:
    if not converged:
        return NO_CONVERGENCE, float("nan")
    if U.max_norm() <= ZERO_TOL:
        return ZERO, 0.0
    margin = float(min(np.min(U.u), np.min(U.v)))
    return (POSITIVE if margin > 0 else NONPOSITIVE), margin


def _solve_at(spec: ProblemSpec, seed, t: float, multiplier: float, amplitudes, tol: float) -> SweepOutcome:
    V = seed.V
    starts = [(f"eps={a:g}", a) for a in amplitudes]
    try:
        s = galerkin_amplitude(spec, t, seed)
    except (SolverError, DomainError, ValueError):
        s = None
    if s is not None:
        starts.append(("galerkin", s))
    attempts = []
    best = None
    for label, a in starts:
        rec = {"seed": label, "amplitude0": a}
        try:
            res = newton_solve(spec, t, a * V, tol=tol)
        except (SolverError, DomainError) as exc:
            rec.update({"outcome": FAULT, "message": str(exc)})
            attempts.append(rec)
            continue
        kind, margin = _classify(res.state, res.converged)
        rec.update(
            {
                "outcome": kind,
                "iterations": res.iterations,
                "residual_norm": res.residual_norm,
                "amplitude": res.state.amplitude,
                "margin": margin,
            }
        )
        attempts.append(rec)
        if kind == POSITIVE and (best is None or best[0] != POSITIVE):
            best = (kind, res, margin)
        elif kind == ZERO and best is None:
            best = (kind, res, margin)
    if best is None:
        kinds = {a["outcome"] for a in attempts}
        outcome = FAULT if kinds == {FAULT} else (NONPOSITIVE if NONPOSITIVE in kinds else NO_CONVERGENCE)
        return SweepOutcome(multiplier, t, outcome, attempts=attempts)
    kind, res, margin = best
    return SweepOutcome(multiplier, t, kind, res.state.amplitude, res.residual_norm, margin, attempts)


def _warm(spec: ProblemSpec) -> None:
    # build cached operators before worker threads share the spec
    spec.principal_operator
    spec.M1, spec.M2
    residual(spec, 1.0, State.zeros(spec.size))


def run_verify(cfg: ScenarioConfig, threads: int | None = None, with_hypotheses: bool = True) -> VerificationReport:
    """Sweep ``t = m * t1`` over the configured multipliers and judge the threshold claim.

    Below threshold every sweep point must end at ``‖U‖∞ <= 1e-8``; above it
    some start must reach a state with positive margin.  Solver faults are
    recorded per point and count as failures without aborting the sweep.
    """
    spec = cfg.spec
    seed = bifurcation_seed(spec)
    label = _threshold_label(spec)
    rep = VerificationReport(cfg.name, spec.mode, label, seed.lambda1, seed.lambda_A, seed.t1)
    _warm(spec)
    jobs = [(m, m * seed.t1) for m in cfg.multipliers]
    if cfg.check_t_one:
        jobs.append((1.0 / seed.t1, 1.0))
    threads = threads or sweep_threads()

    def work(job):
        m, t = job
        return _solve_at(spec, seed, t, m, cfg.seed_amplitudes, cfg.newton_tol)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    if cfg.check_t_one:
        rep.t_one = results.pop()
        rep.t_one_expected = POSITIVE if seed.lambda_A > seed.lambda1 else ZERO
        rep.t_one_consistent = rep.t_one.outcome == rep.t_one_expected
        if not rep.t_one_consistent:
            rep.failures.append(f"t=1: expected {rep.t_one_expected}, got {rep.t_one.outcome}")
    rep.sweep = sorted(results, key=lambda s: s.t)
    for s in rep.sweep:
        if s.multiplier < 1 and s.outcome != ZERO:
            rep.failures.append(f"t/t1={s.multiplier:g}: expected {ZERO}, got {s.outcome}")
        elif s.multiplier > 1 and s.outcome != POSITIVE:
            rep.failures.append(f"t/t1={s.multiplier:g}: expected {POSITIVE}, got {s.outcome}")
    if with_hypotheses:
        rep.hypotheses = run_hypotheses(cfg)
    rep.verdict = "fail" if rep.failures else "pass"
    return rep


# ---------------------------------------------------------------- branch / direction


def run_branch(cfg: ScenarioConfig) -> tuple[Branch, str, dict]:
    """Continue the positive branch; returns the branch, its CSV text and a summary."""
    spec = cfg.spec
    branch = continue_branch(spec, cfg.continuation)
    ts = branch.ts
    summary = {
        "name": cfg.name,
        "t1": branch.t1,
        "points": len(branch.points),
        "direction": branch.direction,
        "stop_reason": branch.stop_reason,
        "min_t": float(ts.min()) if ts.size else None,
        "points_below_t1": int(np.sum(ts < branch.t1)),
    }
    return branch, branch_csv(branch), summary


def _direction_summary(cfg: ScenarioConfig, rep: DirectionReport, branch: Branch) -> str:
    lines = [f"scenario: {cfg.name}", f"case {rep.case_id}, delta = {rep.delta}"]
    lines.append(f"direction: {rep.empirical_direction}")
    if rep.degenerate:
        lines.append("closed form: degenerate (zero)")
    else:
        lines.append(f"closed form: {rep.closed_form_limit:.6g}, alternative sign: {rep.alt_sign_limit:.6g}")
    lines.append(f"empirical limit: {rep.empirical_limit:.6g}")
    lines.append(f"matched: {rep.matched}")
    lines.append(f"verdict: {rep.verdict}")
    below = int(np.sum(branch.ts < branch.t1))
    if rep.empirical_direction == "subcritical":
        lines.append(f"positive solutions below t1: {'yes' if below else 'no'} ({below} points)")
    return "\n".join(lines) + "\n"


def run_direction(cfg: ScenarioConfig) -> tuple[DirectionReport, str, Branch]:
    """Short branch near onset compared against the closed-form limits."""
    spec = cfg.spec
    seed = bifurcation_seed(spec)
    branch = continue_branch(spec, cfg.direction.continuation(), seed)
    limit = eta_limit(spec, seed)
    rep = direction_report(branch, limit, rel_tol=cfg.direction.rel_tol, benchmark=cfg.direction.benchmark)
    return rep, _direction_summary(cfg, rep, branch), branch


# ---------------------------------------------------------------- hypotheses


def _check(name: str, passed: bool, value=None, **detail) -> dict:
    out = {"name": name, "passed": bool(passed), "value": value}
    out.update(detail)
    return out


def run_hypotheses(cfg: ScenarioConfig, identity_tol: float = 5e-3) -> dict:
    """Evaluate the structural hypotheses on the configured data.

    Failures are report content; nothing here raises for a violated
    hypothesis.
    """
    spec = cfg.spec
    grid = spec.grid
    hmax = max(grid.h)
    rng = np.random.default_rng(cfg.seed)
    checks = []

    checks.append(
        _check(
            "mode-constraints",
            not cfg.mode_errors,
            None,
            violations=[{"field": f, "message": m} for f, m in cfg.mode_errors],
        )
    )

    eps = cfg.kernel_eps if cfg.kernel_eps is not None else 4 * hmax
    mats = {}
    for name in ("K1", "K2"):
        ks = getattr(spec, name)
        rep = check_kernel_class(ks, grid, eps).as_dict()
        checks.append(_check(f"{name}-class", rep.pop("passed"), None, eps=eps, **rep))
        mats[name] = kernel_matrix(ks, grid, validate=False)

    pairs = (("Phi", mats["K1"], spec.f, 0), ("Psi", mats["K2"], spec.g, 1))
    fields = [(rng.uniform(0.0, 2.0, grid.size), rng.uniform(0.0, 2.0, grid.size)) for _ in range(cfg.n_random)]

    for label, M, fn, swap in pairs:
        worst = 0.0
        for u, v in fields[:5]:
            own, other = (v, u) if swap else (u, v)
            for xi in (0.5, 2.0, 7.0):
                worst = max(worst, homogeneity_defect(M, fn, own, other, xi))
        checks.append(_check(f"{label}-homogeneity", worst <= 1e-12, worst))

        excess = -math.inf
        for u, v in fields:
            own, other = (v, u) if swap else (u, v)
            val, bound = check_phi_bound(M, fn, own, other)
            slack = 2 * hmax * float(np.max(fn(own, other)))
            excess = max(excess, val - bound - slack)
        checks.append(_check(f"{label}-bound", excess <= 0, excess, samples=len(fields)))

    lattice = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)])
    for label, fn in (("f", spec.f), ("g", spec.g)):
        margin = lower_bound_margin(fn, lattice)
        scale = float(np.max(fn(lattice, lattice)))
        checks.append(_check(f"{label}-lower-bound", margin >= -1e-12 * max(1.0, scale), margin, eps0=fn.eps0))
        own, other = rng.uniform(0.1, 3.0, 64), rng.uniform(0.1, 3.0, 64)
        d = derivative_defect(fn, own, other)
        checks.append(_check(f"{label}-derivatives", d <= 1e-6, d))

    gamma = float(spec.gamma)
    for name in ("K1", "K2"):
        w = rng.standard_normal(grid.size)
        val = kernel_quadratic_form(mats[name], gamma, w)
        zero = kernel_quadratic_form(mats[name], gamma, np.zeros(grid.size))
        checks.append(_check(f"{name}-quadratic-form", val >= 0 and zero == 0, val))

    phi = principal_eigenpair(assemble_operator(grid)).phi
    for name, power in (("alpha", spec.p), ("beta", spec.q)):
        r = advection_identity_residual(grid, phi, getattr(spec, name), float(power))
        checks.append(_check(f"{name}-identity", abs(r) <= identity_tol, r, tolerance=identity_tol))

    return {
        "name": cfg.name,
        "mode": spec.mode,
        "seed": cfg.seed,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
