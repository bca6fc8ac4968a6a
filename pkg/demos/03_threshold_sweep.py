"""Existence of positive steady states exactly above the threshold t1.

For each shipped verification scenario, Newton's method is started near the
trivial state at t = m * t1.  Below threshold every start collapses to zero;
above it a strictly positive solution appears.
"""

from __future__ import annotations

from nonlocal_logistic.config import load_config, shipped_scenarios
from nonlocal_logistic.driver import run_verify

scenarios = shipped_scenarios()
for name in ("symmetric-1d", "advected-1d", "power-1d", "weak-coupling-1d"):
    cfg = load_config(scenarios[name])
    rep = run_verify(cfg, with_hypotheses=False)
    print(f"{name} ({cfg.spec.mode}): t1 = {rep.t1:.6f}")
    for s in rep.sweep:
        print(f"  t/t1 = {s.multiplier:4.2f}  {s.outcome:9s}  amplitude {s.amplitude:.4g}")
    if rep.t_one is not None:
        # at t = 1 the sign of lambda_A - lambda1 decides
        print(f"  t = 1: {rep.t_one.outcome} (lambda_A = {rep.lambda_A:.4g}, {rep.threshold_eigenvalue} = {rep.lambda1:.4g})")
    print(f"  verdict: {rep.verdict}")
