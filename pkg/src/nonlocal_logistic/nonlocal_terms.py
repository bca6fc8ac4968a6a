"""
Kernels, reaction terms and the nonlocal crowding operators.

The crowding term acting on the first species is

    Φ(x) = ∫ K1(x, y) f(|u(y)|, |v(y)|) dy

and the one acting on the second species uses K2 and g.  Reaction families are
written in terms of the species' *own* density first, so ``g`` is evaluated as
``g(|v|, |u|)``; :func:`apply_phi` serves both terms with swapped arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, HypothesisViolation
from .geometry import Grid

__all__ = [
    "KernelSpec",
    "KernelMatrix",
    "ReactionSpec",
    "KernelClassReport",
    "kernel_matrix",
    "apply_phi",
    "check_kernel_class",
    "kernel_quadratic_form",
    "check_phi_bound",
    "homogeneity_defect",
    "lower_bound_margin",
    "derivative_defect",
]

KERNEL_KINDS = ("constant", "separable", "gaussian", "indicator-band", "tabulated")


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Parametric kernel family.

    ``constant``        ``(k0,)``
    ``separable``       ``(c, a0, a1, b0, b1)``: ``c Π(a0 + a1 x_k) Π(b0 + b1 y_k)``
    ``gaussian``        ``(amp, ell)``: ``amp exp(-|x-y|^2 / ell^2)``
    ``indicator-band``  ``(amp, r)``: ``amp`` where ``|x-y| < r``, else 0
    ``tabulated``       node-pair values, shape ``(size, size)``
    """

    kind: str
    params: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        prm = np.asarray(self.params, dtype=float)
        want = {"constant": 1, "separable": 5, "gaussian": 2, "indicator-band": 2}.get(self.kind)
        if want is not None and prm.size != want:
            raise ConfigurationError(f"{self.kind} kernel needs {want} params, got {prm.size}")
        object.__setattr__(self, "params", prm)

    @property
    def low_rank(self) -> bool:
        return self.kind in ("constant", "separable")

    def factors(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Rank-one factors ``K(x_i, y_j) = left_i * right_j`` (low-rank kinds only)."""
        x = grid.nodes
        if self.kind == "constant":
            return np.full(grid.size, self.params[0]), np.ones(grid.size)
        if self.kind == "separable":
            c, a0, a1, b0, b1 = self.params
            return c * np.prod(a0 + a1 * x, axis=1), np.prod(b0 + b1 * x, axis=1)
        raise ValueError(f"{self.kind} kernel has no rank-one form")

    def sample(self, grid: Grid) -> np.ndarray:
        """Raw kernel values ``K(x_i, x_j)`` over interior node pairs."""
        if self.low_rank:
            left, right = self.factors(grid)
            return np.outer(left, right)
        if self.kind == "tabulated":
            if self.params.shape != (grid.size, grid.size):
                raise ConfigurationError(
                    f"tabulated kernel must be {grid.size}x{grid.size}, got {self.params.shape}"
                )
            return self.params.copy()
        x = grid.nodes
        d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
        amp, scale = self.params
        if self.kind == "gaussian":
            return amp * np.exp(-d2 / scale**2)
        return np.where(d2 < scale**2, amp, 0.0)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Quadrature-weighted kernel, ``M[i, j] = K(x_i, x_j) * w_j``.

    Low-rank kernels keep only their two factors; ``dense`` materializes the
    full matrix on demand.
    """

    grid: Grid
    spec: KernelSpec
    sup: float
    _dense: np.ndarray | None = None
    _factors: tuple[np.ndarray, np.ndarray] | None = None

    @cached_property
    def dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        left, right = self._factors
        return np.outer(left, right)

    def matvec(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self._factors is not None:
            left, right = self._factors
            return left * (right @ values)
        return self._dense @ values

    def row_sums(self) -> np.ndarray:
        return self.matvec(np.ones(self.grid.size))


def kernel_matrix(spec: KernelSpec, grid: Grid, validate: bool = True) -> KernelMatrix:
    """Sample and weight a kernel.

    With ``validate`` the sampled values must be nonnegative and not all zero
    (a vanishing kernel cannot satisfy the positivity-near-the-diagonal
    hypothesis); violations raise :class:`HypothesisViolation`.
    """
    w = grid.cell_volume
    if spec.low_rank:
        left, right = spec.factors(grid)
        raw_min = min(left.min() * right.min(), left.max() * right.max(),
                      left.min() * right.max(), left.max() * right.min())
        sup = float(np.max(np.abs(left)) * np.max(np.abs(right)))
        km = KernelMatrix(grid, spec, sup, _factors=(left, right * w))
    else:
        raw = spec.sample(grid)
        raw_min = float(raw.min())
        sup = float(np.max(np.abs(raw)))
        km = KernelMatrix(grid, spec, sup, _dense=raw * w)
    if validate:
        if raw_min < 0:
            raise HypothesisViolation(f"kernel takes negative value {raw_min:.3e}")
        if sup == 0:
            raise HypothesisViolation("kernel vanishes identically; it has no positive set")
    return km


REACTION_FAMILIES = ("power", "mixed", "weighted")


@dataclass(frozen=True)
class ReactionSpec:
    """Homogeneous reaction ``h(own, other)`` of degree ``gamma``.

    ``power``     ``|own|^γ``
    ``mixed``     ``|own|^γ + |other|^(γ-μ) |own|^μ``
    ``weighted``  ``c1 |own|^γ + c2 |other|^γ``
    """

    family: str
    gamma: float
    mu: float = 0.0
    c1: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if self.family not in REACTION_FAMILIES:
            raise ConfigurationError(f"unknown reaction family {self.family!r}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}", "gamma")
        if self.family == "mixed" and not 0 <= self.mu <= self.gamma:
            raise ConfigurationError(f"mu must lie in [0, gamma], got {self.mu}", "mu")
        if self.family == "weighted" and (self.c1 < 0 or self.c2 < 0 or self.c1 + self.c2 <= 0):
            raise ConfigurationError("weights need c1, c2 >= 0 and c1 + c2 > 0", "c1")

    @property
    def eps0(self) -> float:
        """Constant in the lower bound ``h(t, s) >= eps0 * t^γ``."""
        return self.c1 if self.family == "weighted" else 1.0

    def __call__(self, own, other) -> np.ndarray:
        t = np.abs(np.asarray(own, dtype=float))
        s = np.abs(np.asarray(other, dtype=float))
        g = float(self.gamma)
        if self.family == "power":
            return t**g
        if self.family == "mixed":
            return t**g + s ** (g - self.mu) * t**self.mu
        return self.c1 * t**g + self.c2 * s**g

    def d_own(self, own, other) -> np.ndarray:
        """Partial derivative in the own density, for nonnegative arguments."""
        t = np.abs(np.asarray(own, dtype=float))
        s = np.abs(np.asarray(other, dtype=float))
        g = float(self.gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "power":
                return g * _pow(t, g - 1)
            if self.family == "mixed":
                return g * _pow(t, g - 1) + self.mu * s ** (g - self.mu) * _pow(t, self.mu - 1)
            return self.c1 * g * _pow(t, g - 1)

    def d_other(self, own, other) -> np.ndarray:
        t = np.abs(np.asarray(own, dtype=float))
        s = np.abs(np.asarray(other, dtype=float))
        g = float(self.gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "power":
                return np.zeros(np.broadcast(t, s).shape)
            if self.family == "mixed":
                return (g - self.mu) * _pow(s, g - self.mu - 1) * t**self.mu
            return self.c2 * g * _pow(s, g - 1)


def _pow(x: np.ndarray, e: float) -> np.ndarray:
    # x**0 is 1 even at x == 0, which is the right derivative of x**1
    if e == 0:
        return np.ones_like(x)
    return x**e


def apply_phi(M: KernelMatrix, f: ReactionSpec, u, v) -> np.ndarray:
    """``Φ(x_i) = Σ_j M[i, j] f(|u_j|, |v_j|)``; call with ``(M2, g, v, u)`` for Ψ."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (M.grid.size,) or v.shape != u.shape:
        raise ValueError("u and v must be flat fields on the kernel's grid")
    return M.matvec(f(u, v))


@dataclass(frozen=True)
class KernelClassReport:
    passed: bool
    nonnegative: bool
    bounded: bool
    positive_near_diagonal: bool
    failing_node: int | None = None
    witness: tuple[int, int] | None = None

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "nonnegative": self.nonnegative,
            "bounded": self.bounded,
            "positive_near_diagonal": self.positive_near_diagonal,
            "failing_node": self.failing_node,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def check_kernel_class(spec: KernelSpec, grid: Grid, eps: float) -> KernelClassReport:
    """Grid-scale check of nonnegativity, boundedness and positivity near the diagonal.

    For every interior node ``x`` a node pair ``(x', y')`` with both nodes in
    the open ball of radius ``eps`` around ``x`` and ``K(x', y') > 0`` must
    exist.  ``eps`` must resolve at least two cells.  The witness reported is
    the one found for the last node checked (``(x, x)`` whenever the diagonal
    is positive).
    """
    hmax = max(grid.h)
    if eps < 2 * hmax:
        raise ConfigurationError(f"eps={eps} below 2h={2 * hmax:.3g}; ball not resolvable", "eps")
    raw = spec.sample(grid)
    nonneg = bool(np.all(raw >= 0))
    bounded = bool(np.all(np.isfinite(raw)))
    positive = raw > 0
    x = grid.nodes
    witness = None
    failing = None
    diag = np.diagonal(positive)
    for i in range(grid.size):
        if diag[i]:
            witness = (i, i)
            continue
        ball = np.flatnonzero(np.sum((x - x[i]) ** 2, axis=1) < eps**2)
        block = positive[np.ix_(ball, ball)]
        hits = np.argwhere(block)
        if hits.size == 0:
            failing = i
            break
        witness = (int(ball[hits[0, 0]]), int(ball[hits[0, 1]]))
    near_diag = failing is None
    return KernelClassReport(nonneg and bounded and near_diag, nonneg, bounded, near_diag, failing,
                             witness if near_diag else None)


def kernel_quadratic_form(M: KernelMatrix, gamma: float, w) -> float:
    """Discrete ``∫∫ K(x, y) |w(y)|^γ |w(x)|^2 dx dy``."""
    w = np.asarray(w, dtype=float)
    return float(M.grid.cell_volume * np.sum(w**2 * M.matvec(np.abs(w) ** gamma)))


def check_phi_bound(M: KernelMatrix, f: ReactionSpec, u, v) -> tuple[float, float]:
    """Return ``(‖Φ‖∞, ‖K‖∞ |Ω| ‖f(|u|, |v|)‖∞)``."""
    phi = apply_phi(M, f, u, v)
    fmax = float(np.max(f(u, v)))
    return float(np.max(np.abs(phi))), M.sup * M.grid.measure * fmax


def homogeneity_defect(M: KernelMatrix, f: ReactionSpec, u, v, xi: float) -> float:
    """Relative defect ``‖Φ(ξu, ξv) - ξ^γ Φ(u, v)‖∞ / ‖Φ(u, v)‖∞``."""
    base = apply_phi(M, f, u, v)
    scaled = apply_phi(M, f, xi * np.asarray(u), xi * np.asarray(v))
    ref = np.max(np.abs(base))
    return float(np.max(np.abs(scaled - xi ** float(f.gamma) * base)) / ref) if ref > 0 else 0.0


def lower_bound_margin(f: ReactionSpec, lattice=None) -> float:
    """``min (f(t, s) - eps0 t^γ)`` over a lattice of nonnegative pairs."""
    if lattice is None:
        lattice = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 61)])
    t, s = np.meshgrid(lattice, lattice, indexing="ij")
    return float(np.min(f(t, s) - f.eps0 * t ** float(f.gamma)))


def derivative_defect(f: ReactionSpec, own, other, step: float = 1e-6) -> float:
    """Largest relative gap between analytic partials and central differences."""
    own = np.asarray(own, dtype=float)
    other = np.asarray(other, dtype=float)
    worst = 0.0
    for analytic, bump in ((f.d_own(own, other), (1, 0)), (f.d_other(own, other), (0, 1))):
        ht = step * np.maximum(own, 1.0) * bump[0]
        hs = step * np.maximum(other, 1.0) * bump[1]
        hh = ht + hs
        fd = (f(own + ht, other + hs) - f(own - ht, other - hs)) / (2 * hh)
        scale = np.maximum(np.abs(fd), np.abs(analytic)).max()
        if scale > 0:
            worst = max(worst, float(np.max(np.abs(fd - analytic)) / scale))
    return worst
