"""Direction of bifurcation: supercritical or subcritical onset.

Near (t1, 0) the branch satisfies t - t1 ~ eta * eps^delta where delta is the
smallest of gamma, p - 1 and q - 1.  When an advection exponent is strictly
smallest, the closed-form limit depends on the divergence of the advection
field.  Integrating the gradient form by parts gives the opposite sign to the
divergence form, so both candidates are reported and the branch decides.
"""

from __future__ import annotations

from nonlocal_logistic.config import load_config, shipped_scenarios
from nonlocal_logistic.direction import delta_exponent
from nonlocal_logistic.driver import run_direction

print("delta and case for a few exponent triples (gamma, p, q):")
for triple in ((3, 5, 6), (2, 3, 3), (4, 3, 2), (2, 3, 4)):
    delta, case = delta_exponent(*triple)
    print(f"  {triple}: delta = {delta}, case {case}")

scenarios = shipped_scenarios()
for name in ("case1-gaussian", "case6-divfree", "case6-shear", "case6-shear-reversed"):
    _, text, _ = run_direction(load_config(scenarios[name], kind="direction"))
    print()
    print(text, end="")
