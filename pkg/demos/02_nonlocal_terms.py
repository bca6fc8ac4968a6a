"""Kernels, crowding terms and their structural checks."""

from __future__ import annotations

import math

import numpy as np

from nonlocal_logistic import KernelSpec, ReactionSpec, build_grid
from nonlocal_logistic.nonlocal_terms import (
    apply_phi,
    check_kernel_class,
    check_phi_bound,
    homogeneity_defect,
    kernel_matrix,
    lower_bound_margin,
)

grid = build_grid(1, (0, math.pi), 200)
rng = np.random.default_rng(3)
u, v = rng.uniform(0, 2, grid.size), rng.uniform(0, 2, grid.size)

# A kernel becomes a quadrature-weighted matrix M[i, j] = K(x_i, x_j) h.
for spec in (KernelSpec("constant", [1.0]), KernelSpec("gaussian", [1.0, 0.5]), KernelSpec("indicator-band", [1.0, 0.3])):
    report = check_kernel_class(spec, grid, eps=4 * grid.h[0])
    print(f"{spec.kind:14s} kernel admissible: {report.passed}")

# A kernel that vanishes identically is not admissible.
print(f"zero kernel admissible: {check_kernel_class(KernelSpec('constant', [0.0]), grid, 4 * grid.h[0]).passed}")

M = kernel_matrix(KernelSpec("gaussian", [1.0, 0.5]), grid)
# Reaction families are positively homogeneous of degree gamma.
for f in (ReactionSpec("power", 2), ReactionSpec("mixed", 2, mu=1), ReactionSpec("weighted", 2, c1=1, c2=0.5)):
    worst = max(homogeneity_defect(M, f, u, v, xi) for xi in (0.5, 2.0, 7.0))
    val, bound = check_phi_bound(M, f, u, v)
    print(f"{f.family:8s}: homogeneity defect {worst:.1e}, sup Phi {val:.3f} <= {bound:.3f}, "
          f"lower-bound margin {lower_bound_margin(f):.2e}")

phi = apply_phi(M, ReactionSpec("power", 2), u, v)
print(f"Phi ranges over [{phi.min():.3f}, {phi.max():.3f}]")
