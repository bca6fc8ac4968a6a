"""Principal eigenpairs of Dirichlet advection-diffusion operators and the
Perron structure of the 2x2 coupling matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, PositivityError, SolverError
from .geometry import Grid, VectorFieldSpec

__all__ = [
    "EllipticOperator",
    "EigenPair",
    "CouplingMatrix",
    "MatrixEigen",
    "assemble_operator",
    "principal_eigenpair",
    "coupling_eigen",
    "threshold",
]

MAX_ITER = 500


@dataclass(frozen=True, eq=False)
class EllipticOperator:
    """Discrete ``-Δ + μ·∇`` on the interior nodes of ``grid``."""

    grid: Grid
    advection: VectorFieldSpec | None
    matrix: sp.csr_matrix

    @property
    def symmetric(self) -> bool:
        return self.advection is None

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    @cached_property
    def _lu(self):
        return spla.splu(self.matrix.tocsc())

    @cached_property
    def _lu_adjoint(self):
        return spla.splu(self.matrix.T.tocsc())


def peclet_numbers(grid: Grid, vf: VectorFieldSpec) -> np.ndarray:
    """Cell Péclet number ``max|μ_k| h_k / 2`` per axis."""
    return vf.max_abs(grid) * np.asarray(grid.h) / 2.0


def advection_matrix(grid: Grid, vf: VectorFieldSpec) -> sp.csr_matrix:
    """Sparse matrix of ``u -> vf·∇_h u``."""
    comps = vf.sample(grid)
    mat = sp.csr_matrix((grid.size, grid.size))
    for k, d in enumerate(grid.diff_matrices):
        mat = mat + sp.diags(comps[k]) @ d
    return mat.tocsr()


def assemble_operator(grid: Grid, advection: VectorFieldSpec | None = None) -> EllipticOperator:
    """Assemble ``u -> -Δ_h u + μ·∇_h u`` with zero Dirichlet trace.

    Raises :class:`ConfigurationError` when the cell Péclet number reaches 1 on
    some axis, since central differences lose the discrete maximum principle
    there.
    """
    mat = -grid.laplacian_matrix
    if advection is not None:
        pe = peclet_numbers(grid, advection)
        for k, val in enumerate(pe):
            if val >= 1.0:
                raise ConfigurationError(
                    f"cell Péclet number {val:.3g} >= 1 on axis {k}; refine the grid", f"advection.axis{k}"
                )
        mat = mat + advection_matrix(grid, advection)
    return EllipticOperator(grid, advection, sp.csr_matrix(mat))


@dataclass(frozen=True, eq=False)
class EigenPair:
    lambda_: float
    phi: np.ndarray
    iterations: int = 0
    residual: float = 0.0


def principal_eigenpair(
    op: EllipticOperator, tol: float = 1e-10, adjoint: bool = False, max_iter: int = MAX_ITER
) -> EigenPair:
    """Principal eigenpair by inverse power iteration.

    The LU factorization of the operator is computed once and reused.  The
    eigenvalue estimate is ``phi_k[i] / w[i]`` at the entry of largest
    magnitude, so the increment tracks the eigenvector error linearly.  The
    returned ``phi`` is positive with unit maximum.  ``adjoint=True`` works
    with the transposed matrix instead (needed for non-symmetric operators).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = op.matrix.T if adjoint else op.matrix
    lu = op._lu_adjoint if adjoint else op._lu
    phi = np.ones(op.grid.size)
    lam = np.inf
    for it in range(1, max_iter + 1):
        w = lu.solve(phi)
        i = int(np.argmax(np.abs(w)))
        new_lam = phi[i] / w[i]
        phi = w / w[i]
        if abs(new_lam - lam) < tol:
            lam = new_lam
            break
        lam = new_lam
    else:
        raise SolverError(f"inverse power iteration did not converge in {max_iter} steps")
    if not np.all(phi > 0):
        raise PositivityError(
            f"principal eigenvector changes sign (min {phi.min():.3e}); discretization too coarse?"
        )
    residual = float(np.max(np.abs(mat @ phi - lam * phi)))
    return EigenPair(float(lam), phi, it, residual)


@dataclass(frozen=True)
class CouplingMatrix:
    """The positive interaction matrix ``((a, b), (c, d))``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigurationError(f"must be positive, got {val}", f"A.{name}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    @property
    def symmetric(self) -> bool:
        return self.b == self.c

    def scaled(self, k: float) -> "CouplingMatrix":
        return CouplingMatrix(k * self.a, k * self.b, k * self.c, k * self.d)


@dataclass(frozen=True, eq=False)
class MatrixEigen:
    """Perron data of a coupling matrix.

    ``z`` is the right and ``zeta`` the left Perron vector, both positive with
    unit Euclidean norm.  ``sigma``, ``b_hat`` and ``A0`` describe the
    symmetrization obtained by rescaling the second species by ``sigma``.
    """

    lambda_A: float
    z: np.ndarray
    zeta: np.ndarray
    sigma: float
    b_hat: float
    A0: np.ndarray


def coupling_eigen(A: CouplingMatrix) -> MatrixEigen:
    a, b, c, d = A.a, A.b, A.c, A.d
    r = math.hypot((a - d) / 2.0, math.sqrt(b * c))
    # (lam - a)(lam - d) = bc; form the larger gap directly to avoid cancellation
    if a >= d:
        gap_d = (a - d) / 2.0 + r
        gap_a = b * c / gap_d
    else:
        gap_a = (d - a) / 2.0 + r
    lam = a + gap_a
    z = np.array([b, gap_a])
    zeta = np.array([c, gap_a])
    sigma = math.sqrt(b / c)
    b_hat = math.sqrt(b * c)
    A0 = np.array([[a, b_hat], [b_hat, d]])
    return MatrixEigen(lam, z / np.linalg.norm(z), zeta / np.linalg.norm(zeta), sigma, b_hat, A0)


def threshold(A: CouplingMatrix, op: EllipticOperator, tol: float = 1e-10) -> float:
    """Bifurcation value ``λ₁(op) / λ_A``."""
    return principal_eigenpair(op, tol).lambda_ / coupling_eigen(A).lambda_A
