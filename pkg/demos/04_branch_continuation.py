"""Tracing the positive branch from the bifurcation point (t1, 0).

For A = (2, 1, 1, 2), K = 1 and linear crowding on (0, pi), the branch is
known in closed form: u = v = ((3t - 1) / 2) sin x.  The discrete branch
follows the discrete version of that formula to solver precision.
"""

from __future__ import annotations

import numpy as np

from nonlocal_logistic.config import load_config, shipped_scenarios
from nonlocal_logistic.continuation import continue_branch
from nonlocal_logistic.driver import branch_csv

cfg = load_config(shipped_scenarios()["symmetric-1d"], kind="branch")
branch = continue_branch(cfg.spec, cfg.continuation)
grid = cfg.spec.grid
x = grid.nodes[:, 0]
mass = grid.h[0] * np.sum(np.sin(x))

print(f"{len(branch.points)} points, direction {branch.direction}, stop: {branch.stop_reason}")
for pt in branch.points[::4]:
    exact = (3 * pt.t - branch.seed.lambda1) / mass * np.max(np.sin(x))
    print(f"t = {pt.t:.6f}  max u = {np.max(pt.U.u):.10f}  discrete formula {exact:.10f}")

# The same data as written by the CLI branch subcommand.
print(branch_csv(branch).splitlines()[0])
print(branch_csv(branch).splitlines()[1])
