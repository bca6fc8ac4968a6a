"""Integration by parts for the nonlinear advection term.

For u vanishing on the boundary, p * int u^p (b . grad u) equals
-(p / (p + 1)) * int u^(p+1) div b.  The discrete residual decays at second
order under mesh refinement.
"""

from __future__ import annotations

import math

from nonlocal_logistic import build_grid
from nonlocal_logistic.config import load_config, shipped_scenarios
from nonlocal_logistic.geometry import advection_identity_residual
from nonlocal_logistic.spectral import assemble_operator, principal_eigenpair

spec = load_config(shipped_scenarios()["identity-2d"]).spec
for name, power in (("alpha", spec.p), ("beta", spec.q)):
    field = getattr(spec, name)
    prev = None
    print(f"{name} ({field.kind}), power {power}:")
    for n in (15, 31, 63):
        grid = build_grid(2, spec.grid.bounds, [n, n])
        phi = principal_eigenpair(assemble_operator(grid)).phi
        r = abs(advection_identity_residual(grid, phi, field, float(power)))
        order = "" if prev is None else f"  order {math.log2(prev / r):.2f}"
        print(f"  n = {n:3d}: residual {r:.3e}{order}")
        prev = r
