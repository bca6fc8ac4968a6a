"""
Tensor-product grids on intervals and rectangles with homogeneous Dirichlet
boundary, second-order central differences and node-weight quadrature.

Grid functions are flat float arrays over the interior nodes in C order
(axis 0 varies slowest).  Boundary values are never stored; every difference
operator treats them as zero.  Vector fields, in contrast, are evaluated on the
full node set including the boundary, because advection velocities need not
vanish there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DomainError

__all__ = [
    "Grid",
    "VectorFieldSpec",
    "build_grid",
    "gradient",
    "divergence",
    "integrate",
    "inner",
    "advection_identity_residual",
]


@dataclass(frozen=True)
class Grid:
    """Uniform interior nodes of a box ``(low_0, high_0) x ... ``.

    Axis ``k`` carries ``n[k]`` interior nodes with spacing
    ``h[k] = (high - low) / (n[k] + 1)``.
    """

    dim: int
    bounds: tuple[tuple[float, float], ...]
    n: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}", "domain.dim")
        if len(self.bounds) != self.dim or len(self.n) != self.dim:
            raise ConfigurationError("bounds and n need one entry per axis", "domain")
        for k, ((lo, hi), nk) in enumerate(zip(self.bounds, self.n)):
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise ConfigurationError(f"degenerate bounds ({lo}, {hi}) on axis {k}", "domain.bounds")
            if nk < 3:
                raise ConfigurationError(f"need at least 3 interior nodes on axis {k}, got {nk}", "domain.n")

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (nk + 1) for (lo, hi), nk in zip(self.bounds, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.n)

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def cell_volume(self) -> float:
        """Quadrature weight attached to every interior node."""
        return float(np.prod(self.h))

    @property
    def measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.bounds]))

    def axis_coords(self, k: int, boundary: bool = False) -> np.ndarray:
        lo, hi = self.bounds[k]
        nk = self.n[k]
        pts = np.linspace(lo, hi, nk + 2)
        return pts if boundary else pts[1:-1]

    def mesh(self, boundary: bool = False) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like the (interior or full) node array."""
        axes = [self.axis_coords(k, boundary) for k in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates, shape ``(size, dim)``."""
        return np.stack([c.ravel() for c in self.mesh()], axis=1)

    def field(self, fn) -> np.ndarray:
        """Sample ``fn(*coords)`` at the interior nodes as a flat array."""
        vals = np.asarray(fn(*self.mesh()), dtype=float)
        return np.broadcast_to(vals, self.shape).ravel().copy()

    def refine(self, factor: int) -> "Grid":
        """Grid with ``factor`` times as many interior nodes per axis."""
        return Grid(self.dim, self.bounds, tuple(int(factor * nk) for nk in self.n))

    @cached_property
    def diff_matrices(self) -> tuple[sp.csr_matrix, ...]:
        """Central first-difference matrices, one per axis, zero Dirichlet trace."""
        mats = []
        for k in range(self.dim):
            nk, hk = self.n[k], self.h[k]
            c = sp.diags([-np.ones(nk - 1), np.ones(nk - 1)], [-1, 1]) / (2.0 * hk)
            mats.append(_embed_axis(c, k, self.n))
        return tuple(mats)

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Five-point (three-point in 1D) discrete Laplacian, zero Dirichlet trace."""
        lap = sp.csr_matrix((self.size, self.size))
        for k in range(self.dim):
            nk, hk = self.n[k], self.h[k]
            t = sp.diags(
                [np.ones(nk - 1), -2.0 * np.ones(nk), np.ones(nk - 1)], [-1, 0, 1]
            ) / hk**2
            lap = lap + _embed_axis(t, k, self.n)
        return lap.tocsr()


def _embed_axis(op1d, axis: int, n: Sequence[int]) -> sp.csr_matrix:
    out = sp.identity(1, format="csr")
    for k, nk in enumerate(n):
        factor = op1d if k == axis else sp.identity(nk)
        out = sp.kron(out, factor)
    return sp.csr_matrix(out)


def build_grid(dim: int, bounds, n) -> Grid:
    """Construct a :class:`Grid`.

    ``bounds`` may be a single ``(low, high)`` pair when ``dim == 1`` and ``n``
    may be a scalar, applied to every axis.

    >>> g = build_grid(2, ((0, 1), (0, 1)), (3, 3))
    >>> g.size, g.h
    (9, (0.25, 0.25))
    """
    if dim == 1 and len(bounds) == 2 and np.isscalar(bounds[0]):
        bounds = (bounds,)
    if np.isscalar(n):
        n = (int(n),) * dim
    try:
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed bounds {bounds!r}", "domain.bounds") from exc
    return Grid(int(dim), bounds, tuple(int(nk) for nk in n))


def _check_field(grid: Grid, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).ravel()
    if u.shape != (grid.size,):
        raise ValueError(f"field has {u.size} values, grid has {grid.size} interior nodes")
    return u


def gradient(grid: Grid, u) -> np.ndarray:
    """Central-difference gradient, shape ``(dim, size)``."""
    u = _check_field(grid, u)
    return np.stack([d @ u for d in grid.diff_matrices])


def integrate(grid: Grid, u) -> float:
    """Integral of the zero-extended field (trapezoid rule with zero end values)."""
    return float(np.sum(_check_field(grid, u)) * grid.cell_volume)


def inner(grid: Grid, u, w) -> float:
    return integrate(grid, np.asarray(u) * np.asarray(w))


VECTOR_FIELD_KINDS = ("constant", "rotation", "shear", "gradient", "tabulated")


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """Advection velocity field.

    kinds and their ``params``:

    ``constant``
        the ``dim`` components.
    ``rotation``
        ``(omega, cx, cy)`` giving ``omega * (-(y - cy), x - cx)``; 2D only.
        ``(omega,)`` centres at the origin.
    ``shear``
        affine field ``B x + b``; params are the ``dim*dim`` entries of ``B``
        (row-major) optionally followed by ``b``.  ``(x, 0)`` is ``[1, 0, 0, 0]``.
    ``gradient``
        gradient of ``amp * exp(-|x - c|^2 / width^2)``; params
        ``(amp, width, c_0, ..)``.
    ``tabulated``
        values on the full node set (boundary included), shape
        ``(dim, n_0 + 2, ...)``.
    """

    kind: str
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in VECTOR_FIELD_KINDS:
            raise ConfigurationError(f"unknown vector field kind {self.kind!r}")
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))

    @classmethod
    def zero(cls, dim: int) -> "VectorFieldSpec":
        return cls("constant", np.zeros(dim))

    @property
    def divergence_free(self) -> bool:
        """True for kinds whose divergence vanishes identically."""
        return self.kind in ("constant", "rotation")

    def _values(self, grid: Grid, coords: tuple[np.ndarray, ...]) -> np.ndarray:
        d, prm = grid.dim, self.params
        shape = coords[0].shape
        if self.kind == "constant":
            if prm.size != d:
                raise ConfigurationError(f"constant field needs {d} components, got {prm.size}")
            return np.stack([np.full(shape, c) for c in prm])
        if self.kind == "rotation":
            if d != 2:
                raise ConfigurationError("rotation fields are defined in 2D only")
            omega = prm[0]
            cx, cy = (prm[1], prm[2]) if prm.size >= 3 else (0.0, 0.0)
            x, y = coords
            return np.stack([-omega * (y - cy), omega * (x - cx)])
        if self.kind == "shear":
            if prm.size not in (d * d, d * d + d):
                raise ConfigurationError(f"shear field needs {d * d} or {d * d + d} params")
            b_mat = prm[: d * d].reshape(d, d)
            offset = prm[d * d :] if prm.size > d * d else np.zeros(d)
            return np.stack(
                [sum(b_mat[i, j] * coords[j] for j in range(d)) + offset[i] for i in range(d)]
            )
        if self.kind == "gradient":
            if prm.size != 2 + d:
                raise ConfigurationError(f"gradient field needs {2 + d} params")
            amp, width, centre = prm[0], prm[1], prm[2:]
            r2 = sum((coords[j] - centre[j]) ** 2 for j in range(d))
            s = amp * np.exp(-r2 / width**2)
            return np.stack([-2.0 * (coords[j] - centre[j]) / width**2 * s for j in range(d)])
        # tabulated
        full = tuple(nk + 2 for nk in grid.n)
        if prm.shape != (d, *full):
            raise ConfigurationError(f"tabulated field must have shape {(d, *full)}, got {prm.shape}")
        if shape == full:
            return prm.copy()
        return prm[(slice(None),) + (slice(1, -1),) * d].copy()

    def sample(self, grid: Grid) -> np.ndarray:
        """Components at the interior nodes, shape ``(dim, size)``."""
        vals = self._values(grid, grid.mesh())
        return vals.reshape(grid.dim, grid.size)

    def sample_full(self, grid: Grid) -> np.ndarray:
        """Components on all nodes including the boundary, shape ``(dim, n_0+2, ...)``."""
        return self._values(grid, grid.mesh(boundary=True))

    def max_abs(self, grid: Grid) -> np.ndarray:
        """Per-axis maximum of ``|component|`` over the full node set."""
        full = self.sample_full(grid)
        return np.abs(full).reshape(grid.dim, -1).max(axis=1)


def divergence(vf: VectorFieldSpec, grid: Grid) -> np.ndarray:
    """Central-difference divergence of the sampled field at the interior nodes."""
    full = vf.sample_full(grid)
    out = np.zeros(grid.shape)
    interior = (slice(1, -1),) * grid.dim
    for k in range(grid.dim):
        comp = full[k]
        fwd = list(interior)
        bwd = list(interior)
        fwd[k] = slice(2, None)
        bwd[k] = slice(None, -2)
        out += (comp[tuple(fwd)] - comp[tuple(bwd)]) / (2.0 * grid.h[k])
    return out.ravel()


def advection_identity_residual(grid: Grid, u, vf: VectorFieldSpec, p: float) -> float:
    """Defect of ``p∫u^p (vf·∇u) = -(p/(p+1))∫u^(p+1) div vf`` for zero-trace ``u``.

    Returns the sum of both sides moved to the left; it vanishes up to
    quadrature error.
    """
    u = _check_field(grid, u)
    if np.any(u < 0):
        raise DomainError("advection identity needs a nonnegative field")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    transport = np.sum(vf.sample(grid) * gradient(grid, u), axis=0)
    lhs = p * integrate(grid, u**p * transport)
    rhs = p / (p + 1.0) * integrate(grid, u ** (p + 1.0) * divergence(vf, grid))
    return lhs + rhs
