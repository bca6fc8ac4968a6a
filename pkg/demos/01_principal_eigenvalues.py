"""Principal eigenvalues, the coupling eigenvalue and the threshold t1.

Run with ``python demos/01_principal_eigenvalues.py``.
"""

from __future__ import annotations

import math

from nonlocal_logistic import CouplingMatrix, VectorFieldSpec, build_grid
from nonlocal_logistic.spectral import assemble_operator, coupling_eigen, principal_eigenpair

# The Dirichlet Laplacian on (0, pi) has principal eigenvalue 1 with
# eigenfunction sin x.  Central differences converge at second order.
for n in (32, 64, 128, 256):
    pair = principal_eigenpair(assemble_operator(build_grid(1, (0, math.pi), n)))
    print(f"n = {n:4d}: lambda1 = {pair.lambda_:.10f}  error = {abs(pair.lambda_ - 1):.2e}")

# A constant drift c shifts the eigenvalue by c^2 / 4 (Liouville transform).
drift = VectorFieldSpec("constant", [2.0])
adv = principal_eigenpair(assemble_operator(build_grid(1, (0, math.pi), 256), drift))
print(f"with drift 2: lambda1 = {adv.lambda_:.6f} (continuum value 2)")
print(f"eigenfunction is positive: min phi = {adv.phi.min():.3e}")

# On the unit square the continuum value is 2 pi^2.
sq = principal_eigenpair(assemble_operator(build_grid(2, ((0, 1), (0, 1)), 64)))
print(f"unit square, 64^2: {sq.lambda_:.6f} vs 2 pi^2 = {2 * math.pi**2:.6f}")

# The coupling matrix contributes its Perron eigenvalue lambda_A; the
# branch of positive states leaves zero at t1 = lambda1 / lambda_A.
A = CouplingMatrix(2, 1, 1, 2)
me = coupling_eigen(A)
print(f"A = (2, 1, 1, 2): lambda_A = {me.lambda_A:.6f}, z = {me.z}, zeta = {me.zeta}")
print(f"threshold t1 = {1 / me.lambda_A:.6f} on (0, pi)")
