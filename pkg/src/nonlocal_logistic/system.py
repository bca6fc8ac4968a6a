"""
Discrete residual and Jacobian of the parametrized system

    -Δu + p|u|^(p-1) α·∇u + Φ(u, v) u = t (a u + b v)
    -Δv + q|v|^(q-1) β·∇v + Ψ(u, v) v = t (c u + d v)

with zero Dirichlet data, and a damped Newton solver for it.  With
``p = q = 1`` the advection is linear and belongs to the principal operator
(mode ``linear-advection``); with ``p, q > 1`` it vanishes to higher order at
the trivial state (mode ``power-advection``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, DomainError, SolverError
from .geometry import Grid, VectorFieldSpec, divergence
from .nonlocal_terms import KernelSpec, ReactionSpec, apply_phi, kernel_matrix
from .spectral import (
    CouplingMatrix,
    EllipticOperator,
    advection_matrix,
    assemble_operator,
    peclet_numbers,
)

__all__ = [
    "LINEAR",
    "POWER",
    "ProblemSpec",
    "State",
    "NewtonResult",
    "residual",
    "jacobian",
    "newton_solve",
    "positivity_check",
    "damped_newton",
]

LINEAR = "linear-advection"
POWER = "power-advection"
DIV_TOL = 1e-10
DEFAULT_BLOWUP = 1e6


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Complete discrete problem.

    ``p``, ``q`` and ``gamma`` may be given as :class:`fractions.Fraction` so
    that exponent ties are decided exactly.  ``theorem_run=False`` relaxes the
    divergence-free requirement in power mode (bifurcation-direction studies).
    """

    mode: str
    grid: Grid
    A: CouplingMatrix
    p: Fraction | float
    q: Fraction | float
    alpha: VectorFieldSpec
    beta: VectorFieldSpec
    K1: KernelSpec
    K2: KernelSpec
    f: ReactionSpec
    g: ReactionSpec
    gamma: Fraction | float
    theorem_run: bool = True
    validate_kernels: bool = True
    strict: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Raise on malformed input; mode constraints raise only when ``strict``."""
        p, q, gamma = self.p, self.q, self.gamma
        if self.mode not in (LINEAR, POWER):
            raise ConfigurationError(f"unknown mode {self.mode!r}", "mode")
        if p < 1 or q < 1:
            raise ConfigurationError("p and q must be >= 1", "p")
        if float(self.f.gamma) != float(gamma) or float(self.g.gamma) != float(gamma):
            raise ConfigurationError("f and g must share the homogeneity degree gamma", "gamma")
        for name in ("alpha", "beta"):
            pe = peclet_numbers(self.grid, getattr(self, name))
            if np.any(pe >= 1.0):
                axis = int(np.argmax(pe))
                raise ConfigurationError(f"cell Péclet number {pe[axis]:.3g} >= 1 on axis {axis}", name)
        if self.strict:
            for fld, msg in self.mode_violations():
                raise ConfigurationError(msg, fld)

    def mode_violations(self) -> list[tuple[str, str]]:
        """``(field, message)`` for every structural constraint of the mode that fails."""
        p, q, gamma = self.p, self.q, self.gamma
        out = []
        if self.mode == LINEAR:
            if p != 1 or q != 1:
                out.append(("p", "linear-advection mode requires p = q = 1"))
            if not _same_field(self.grid, self.alpha, self.beta):
                out.append(("beta", "linear-advection mode requires alpha = beta"))
            if self.max_divergence("alpha") > DIV_TOL:
                out.append(("alpha", "linear-advection mode requires div alpha = 0"))
        else:
            if not (p > 1 and q > 1):
                out.append(("p", "power-advection mode requires p, q > 1"))
            if self.theorem_run:
                if not gamma > max(p, q):
                    out.append(("gamma", "theorem runs require gamma > max(p, q)"))
                for name in ("alpha", "beta"):
                    if self.max_divergence(name) > DIV_TOL:
                        out.append((name, f"theorem runs require div {name} = 0"))
        return out

    def max_divergence(self, name: str) -> float:
        return float(np.max(np.abs(divergence(getattr(self, name), self.grid))))

    @property
    def size(self) -> int:
        return self.grid.size

    @cached_property
    def principal_operator(self) -> EllipticOperator:
        """Linearization at the trivial state without the coupling term."""
        if self.mode == LINEAR and np.any(self.alpha.max_abs(self.grid) > 0):
            return assemble_operator(self.grid, self.alpha)
        return assemble_operator(self.grid, None)

    @cached_property
    def M1(self):
        return kernel_matrix(self.K1, self.grid, validate=self.validate_kernels)

    @cached_property
    def M2(self):
        return kernel_matrix(self.K2, self.grid, validate=self.validate_kernels)

    @cached_property
    def _neg_laplacian(self):
        return (-self.grid.laplacian_matrix).tocsr()

    @cached_property
    def _adv_alpha(self):
        return advection_matrix(self.grid, self.alpha)

    @cached_property
    def _adv_beta(self):
        return advection_matrix(self.grid, self.beta)

    def with_grid(self, grid: Grid) -> "ProblemSpec":
        return _replace(self, grid=grid)

    def with_coupling(self, A: CouplingMatrix) -> "ProblemSpec":
        return _replace(self, A=A)


def _replace(spec: ProblemSpec, **changes) -> ProblemSpec:
    from dataclasses import fields

    kw = {f.name: getattr(spec, f.name) for f in fields(spec)}
    kw.update(changes)
    return ProblemSpec(**kw)


def _same_field(grid: Grid, a: VectorFieldSpec, b: VectorFieldSpec) -> bool:
    return np.array_equal(a.sample_full(grid), b.sample_full(grid))


@dataclass(frozen=True, eq=False)
class State:
    """Pair of grid functions ``(u, v)``."""

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_vector(cls, x) -> "State":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n].copy(), x[n:].copy())

    @classmethod
    def zeros(cls, size: int) -> "State":
        return cls(np.zeros(size), np.zeros(size))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def __mul__(self, k: float) -> "State":
        return State(k * self.u, k * self.v)

    __rmul__ = __mul__

    def __add__(self, other: "State") -> "State":
        return State(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "State") -> "State":
        return State(self.u - other.u, self.v - other.v)

    def max_norm(self) -> float:
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.v))))

    @property
    def amplitude(self) -> float:
        return float(np.max(self.u) + np.max(self.v))


def _advection_power(w: np.ndarray, p) -> np.ndarray:
    return float(p) * np.abs(w) ** (float(p) - 1.0)


def nonlinear_terms(spec: ProblemSpec, U: State) -> State:
    """The terms moved out of the principal part: crowding, plus power advection.

    In linear mode only the crowding terms ``(Φ u, Ψ v)`` are returned; in
    power mode the advection ``p|u|^(p-1) α·∇u`` is added.
    """
    u, v = U.u, U.v
    hu = apply_phi(spec.M1, spec.f, u, v) * u
    hv = apply_phi(spec.M2, spec.g, v, u) * v
    if spec.mode == POWER:
        hu = hu + _advection_power(u, spec.p) * (spec._adv_alpha @ u)
        hv = hv + _advection_power(v, spec.q) * (spec._adv_beta @ v)
    return State(hu, hv)


def residual(spec: ProblemSpec, t: float, U: State) -> State:
    """Componentwise residual ``F(t, U)`` at the interior nodes."""
    u, v = U.u, U.v
    A = spec.A
    lap = spec._neg_laplacian
    fu = lap @ u + _advection_power(u, spec.p) * (spec._adv_alpha @ u)
    fv = lap @ v + _advection_power(v, spec.q) * (spec._adv_beta @ v)
    fu += apply_phi(spec.M1, spec.f, u, v) * u - t * (A.a * u + A.b * v)
    fv += apply_phi(spec.M2, spec.g, v, u) * v - t * (A.c * u + A.d * v)
    return State(fu, fv)


def _advection_blocks(w: np.ndarray, p, adv) -> np.ndarray:
    """Derivative of ``w -> p|w|^(p-1) (adv @ w)`` as a dense matrix."""
    p = float(p)
    transport = adv @ w
    if p == 1.0:
        return adv.toarray()
    if p < 2.0 and np.any(w == 0):
        raise DomainError(
            f"advection exponent {p} < 2 is not differentiable at zero nodes; start from positive data"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(w == 0, 0.0, p * (p - 1.0) * np.abs(w) ** (p - 2.0) * np.sign(w))
    out = (_advection_power(w, p)[:, None] * adv.toarray())
    out[np.diag_indices_from(out)] += coef * transport
    return out


def _nonlocal_block(M, own_w: np.ndarray, deriv: np.ndarray, sign: np.ndarray) -> np.ndarray:
    """``diag(own_w) @ M @ diag(deriv * sign)`` with a finite-safe derivative."""
    dd = np.where(np.isfinite(deriv), deriv, 0.0) * sign
    return own_w[:, None] * M.dense * dd[None, :]


def jacobian(spec: ProblemSpec, t: float, U: State) -> np.ndarray:
    """Dense ``2N x 2N`` Jacobian of :func:`residual` with respect to ``(u, v)``."""
    u, v = U.u, U.v
    n = spec.size
    A = spec.A
    lap = spec._neg_laplacian.toarray()
    eye = np.eye(n)
    phi = apply_phi(spec.M1, spec.f, u, v)
    psi = apply_phi(spec.M2, spec.g, v, u)
    su, sv = np.sign(u), np.sign(v)
    au, av = np.abs(u), np.abs(v)

    juu = lap + _advection_blocks(u, spec.p, spec._adv_alpha) + np.diag(phi) - t * A.a * eye
    juu += _nonlocal_block(spec.M1, u, spec.f.d_own(au, av), su)
    juv = _nonlocal_block(spec.M1, u, spec.f.d_other(au, av), sv) - t * A.b * eye
    jvu = _nonlocal_block(spec.M2, v, spec.g.d_other(av, au), su) - t * A.c * eye
    jvv = lap + _advection_blocks(v, spec.q, spec._adv_beta) + np.diag(psi) - t * A.d * eye
    jvv += _nonlocal_block(spec.M2, v, spec.g.d_own(av, au), sv)
    return np.block([[juu, juv], [jvu, jvv]])


def positivity_check(U: State) -> tuple[bool, float]:
    """``(both components positive everywhere, smallest nodal value)``."""
    margin = float(min(np.min(U.u), np.min(U.v)))
    return margin > 0, margin


@dataclass
class NewtonResult:
    """Outcome of a Newton solve; ``converged=False`` is a divergence report."""

    state: State
    converged: bool
    iterations: int
    residual_norm: float
    reason: str = ""
    history: list[float] = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return self.state.vector


def _lu_solve(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(jac)):
        raise SolverError("Jacobian has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            lu = sla.lu_factor(jac, check_finite=False)
        except (sla.LinAlgWarning, sla.LinAlgError, ValueError) as exc:
            raise SolverError("singular Jacobian", condition=_cond(jac)) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise SolverError("singular Jacobian", condition=_cond(jac))
    return sla.lu_solve(lu, rhs, check_finite=False)


def _cond(jac: np.ndarray) -> float:
    try:
        return float(np.linalg.cond(jac))
    except np.linalg.LinAlgError:
        return float("inf")


def damped_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float,
    max_iter: int = 50,
    blowup: float = DEFAULT_BLOWUP,
    min_step: float = 2.0**-8,
) -> tuple[np.ndarray, bool, int, float, str, list[float]]:
    """Newton iteration with step halving on residual-norm increase.

    Halving stops at ``min_step``; that step is then taken regardless.
    Returns ``(x, converged, iterations, residual_norm, reason, history)``.
    """
    x = np.array(x0, dtype=float)
    r = fun(x)
    rn = float(np.max(np.abs(r)))
    history = [rn]
    for it in range(max_iter + 1):
        if not np.isfinite(rn):
            return x, False, it, rn, "non-finite residual", history
        if rn <= tol:
            return x, True, it, rn, "", history
        if it == max_iter:
            break
        dx = _lu_solve(jac(x), -r)
        step = 1.0
        while True:
            x_try = x + step * dx
            r_try = fun(x_try)
            rn_try = float(np.max(np.abs(r_try)))
            if rn_try < rn or step <= min_step:
                break
            step /= 2.0
        x, r, rn = x_try, r_try, rn_try
        history.append(rn)
        if np.max(np.abs(x)) > blowup:
            return x, False, it + 1, rn, f"iterate exceeded blowup threshold {blowup:g}", history
    return x, False, max_iter, rn, f"no convergence in {max_iter} iterations", history


def newton_solve(
    spec: ProblemSpec,
    t: float,
    U0: State,
    tol: float = 1e-10,
    max_iter: int = 50,
    blowup: float = DEFAULT_BLOWUP,
) -> NewtonResult:
    """Solve ``F(t, U) = 0`` from ``U0``.

    Raises :class:`SolverError` on a singular Jacobian; non-convergence and
    blowup come back as ``NewtonResult(converged=False)`` holding the last
    iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, ok, its, rn, reason, hist = damped_newton(
        lambda x: residual(spec, t, State.from_vector(x)).vector,
        lambda x: jacobian(spec, t, State.from_vector(x)),
        U0.vector,
        tol,
        max_iter,
        blowup,
    )
    return NewtonResult(State.from_vector(x), ok, its, rn, reason, hist)
