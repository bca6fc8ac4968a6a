"""
Tracking the branch of positive solutions that leaves the trivial state at
``(t1, 0)``.

Points near onset are computed with the amplitude ``ε`` (the projection of
``U`` onto the null vector ``V``) as parameter, because the branch is vertical
in ``t`` there.  Pseudo-arclength predictor-corrector steps take over from the
third point when enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import SolverError
from .spectral import coupling_eigen, principal_eigenpair
from .system import (
    ProblemSpec,
    State,
    damped_newton,
    jacobian,
    positivity_check,
    residual,
)

__all__ = [
    "BifurcationSeed",
    "BranchPoint",
    "Branch",
    "ContinuationSettings",
    "DirectionVerdict",
    "bifurcation_seed",
    "galerkin_amplitude",
    "solve_at_epsilon",
    "continue_branch",
    "detect_direction",
]

SUPERCRITICAL = "supercritical"
SUBCRITICAL = "subcritical"
UNDETERMINED = "undetermined"


@dataclass(frozen=True, eq=False)
class BifurcationSeed:
    """Eigen-data at the bifurcation point.

    ``V = phi * xi`` spans the kernel of the linearization at ``(t1, 0)``;
    ``W = phi_adjoint * zeta`` spans the kernel of its adjoint and is the test
    vector for projections.  ``W = V`` when both the principal operator and
    the coupling matrix are symmetric.
    """

    t1: float
    lambda1: float
    lambda_A: float
    phi: np.ndarray
    phi_adjoint: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray

    @property
    def V(self) -> State:
        return State(self.xi[0] * self.phi, self.xi[1] * self.phi)

    @property
    def W(self) -> State:
        return State(self.zeta[0] * self.phi_adjoint, self.zeta[1] * self.phi_adjoint)

    def epsilon(self, U: State) -> float:
        """Coefficient of ``U`` along ``V`` (orthogonal projection)."""
        V = self.V.vector
        return float(U.vector @ V / (V @ V))


def bifurcation_seed(spec: ProblemSpec, tol: float = 1e-10) -> BifurcationSeed:
    op = spec.principal_operator
    pair = principal_eigenpair(op, tol)
    phi_adj = pair.phi if op.symmetric else principal_eigenpair(op, tol, adjoint=True).phi
    me = coupling_eigen(spec.A)
    return BifurcationSeed(pair.lambda_ / me.lambda_A, pair.lambda_, me.lambda_A, pair.phi, phi_adj, me.z, me.zeta)


def galerkin_amplitude(
    spec: ProblemSpec, t: float, seed: BifurcationSeed, s_min: float = 1e-4, s_max: float = 1e3
) -> float | None:
    """Smallest ``s > 0`` with ``<F(t, sV), W> = 0``, or ``None``.

    This one-mode projection gives a starting amplitude for Newton at
    parameters far from onset, where plain ``εV`` seeds fall into the basin
    of the trivial solution.
    """
    V, W = seed.V, seed.W.vector

    def g(s):
        return float(residual(spec, t, s * V).vector @ W) / s

    grid = np.geomspace(s_min, s_max, 71)
    vals = [g(s) for s in grid]
    for k in range(len(grid) - 1):
        if vals[k] < 0 <= vals[k + 1]:
            return float(brentq(g, grid[k], grid[k + 1], xtol=1e-14, rtol=1e-12))
    return None


@dataclass(frozen=True)
class ContinuationSettings:
    initial_epsilon: float = 0.01
    step: float = 0.01
    max_points: int = 40
    newton_tol: float = 1e-10
    arclength: bool = True
    max_amplitude: float = 1e3
    max_bisections: int = 5
    max_iter: int = 30

    def __post_init__(self):
        for name in ("initial_epsilon", "step", "newton_tol", "max_amplitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_points < 2:
            raise ValueError("max_points must be at least 2")


@dataclass(frozen=True, eq=False)
class BranchPoint:
    t: float
    U: State
    amplitude: float
    epsilon: float
    residual_norm: float
    rho_norm: float

    @property
    def min_u(self) -> float:
        return float(np.min(self.U.u))

    @property
    def min_v(self) -> float:
        return float(np.min(self.U.v))


@dataclass(eq=False)
class Branch:
    spec: ProblemSpec
    seed: BifurcationSeed
    points: list[BranchPoint] = field(default_factory=list)
    direction: str = UNDETERMINED
    stop_reason: str = ""

    @property
    def t1(self) -> float:
        return self.seed.t1

    @property
    def V(self) -> State:
        return self.seed.V

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points])

    @property
    def ts(self) -> np.ndarray:
        return np.array([p.t for p in self.points])


def _make_point(spec, seed, U: State, t: float, rn: float) -> BranchPoint:
    eps = seed.epsilon(U)
    rho = (U.vector / eps - seed.V.vector) if eps != 0 else np.full(2 * spec.size, np.inf)
    return BranchPoint(float(t), U, U.amplitude, eps, float(rn), float(np.max(np.abs(rho))))


def _bordered(spec, extra_row, extra_val):
    n2 = 2 * spec.size
    A = spec.A

    def fun(x):
        U = State.from_vector(x[:n2])
        return np.append(residual(spec, x[n2], U).vector, extra_val(x))

    def jac(x):
        U = State.from_vector(x[:n2])
        J = np.zeros((n2 + 1, n2 + 1))
        J[:n2, :n2] = jacobian(spec, x[n2], U)
        J[:n2, n2] = -np.concatenate([A.a * U.u + A.b * U.v, A.c * U.u + A.d * U.v])
        J[n2, :] = extra_row(x)
        return J

    return fun, jac


def solve_at_epsilon(
    spec: ProblemSpec,
    seed: BifurcationSeed,
    epsilon: float,
    guess: tuple[State, float] | None = None,
    tol: float = 1e-10,
    max_iter: int = 30,
) -> tuple[State, float, bool, float]:
    """Solve ``F(t, U) = 0`` together with ``<U, V>/<V, V> = ε`` for ``(U, t)``.

    Returns ``(U, t, converged, residual_norm)``.
    """
    Vv = seed.V.vector
    vv = Vv @ Vv
    n2 = 2 * spec.size
    row = np.append(Vv / vv, 0.0)
    fun, jac = _bordered(spec, lambda x: row, lambda x: x[:n2] @ Vv / vv - epsilon)
    U0, t0 = guess if guess is not None else (epsilon * seed.V, seed.t1)
    x, ok, _, rn, _, _ = damped_newton(fun, jac, np.append(U0.vector, t0), tol, max_iter)
    return State.from_vector(x[:n2]), float(x[n2]), ok, rn


def _arclength_corrector(spec, seed, x_pred, tangent, tol, max_iter):
    n2 = 2 * spec.size
    Vv = seed.V.vector
    vv = Vv @ Vv
    weights = np.append(np.full(n2, 1.0 / vv), 1.0)
    row = tangent * weights
    fun, jac = _bordered(spec, lambda x: row, lambda x: float(row @ (x - x_pred)))
    x, ok, _, rn, _, _ = damped_newton(fun, jac, x_pred, tol, max_iter)
    return x, ok, rn


def _metric_norm(dx: np.ndarray, vv: float) -> float:
    return float(np.sqrt(dx[:-1] @ dx[:-1] / vv + dx[-1] ** 2))


def continue_branch(
    spec: ProblemSpec, settings: ContinuationSettings | None = None, seed: BifurcationSeed | None = None
) -> Branch:
    """Trace the positive branch from ``(t1, 0)``.

    Every accepted point is positive, converged to ``settings.newton_tol``
    and has a larger ``ε`` than its predecessor.  A failed step is bisected
    up to ``settings.max_bisections`` times before the branch is truncated;
    ``Branch.stop_reason`` records why tracing ended.
    """
    settings = settings or ContinuationSettings()
    seed = seed or bifurcation_seed(spec)
    branch = Branch(spec, seed)
    n2 = 2 * spec.size
    Vv = seed.V.vector
    vv = float(Vv @ Vv)

    def accept(U: State, t: float, ok: bool, rn: float) -> tuple[BranchPoint | None, str]:
        if not ok:
            return None, "corrector did not converge"
        pos, margin = positivity_check(U)
        if not pos:
            return None, f"lost positivity (min {margin:.3e})"
        pt = _make_point(spec, seed, U, t, rn)
        if branch.points and pt.epsilon <= branch.points[-1].epsilon:
            return None, "epsilon did not increase (fold or return to the trivial state)"
        return pt, ""

    def natural_step(eps_target: float):
        pts = branch.points
        if len(pts) >= 2:
            p0, p1 = pts[-2], pts[-1]
            w = (eps_target - p1.epsilon) / (p1.epsilon - p0.epsilon)
            guess = (p1.U + w * (p1.U - p0.U), p1.t + w * (p1.t - p0.t))
        elif len(pts) == 1:
            p1 = pts[-1]
            guess = ((eps_target / p1.epsilon) * p1.U, p1.t)
        else:
            guess = None
        try:
            U, t, ok, rn = solve_at_epsilon(spec, seed, eps_target, guess, settings.newton_tol, settings.max_iter)
        except SolverError as exc:
            return None, f"solver error: {exc}"
        return accept(U, t, ok, rn)

    step = settings.step
    while len(branch.points) < settings.max_points:
        k = len(branch.points)
        use_arclength = settings.arclength and k >= 2
        reason = ""
        pt = None
        h = step
        for _ in range(settings.max_bisections + 1):
            if not use_arclength:
                prev = branch.points[-1].epsilon if branch.points else 0.0
                target = settings.initial_epsilon if k == 0 else prev + h
                pt, reason = natural_step(target)
            else:
                p0, p1 = branch.points[-2], branch.points[-1]
                x0 = np.append(p0.U.vector, p0.t)
                x1 = np.append(p1.U.vector, p1.t)
                tangent = (x1 - x0) / _metric_norm(x1 - x0, vv)
                x_pred = x1 + h * tangent
                try:
                    x, ok, rn = _arclength_corrector(
                        spec, seed, x_pred, tangent, settings.newton_tol, settings.max_iter
                    )
                    pt, reason = accept(State.from_vector(x[:n2]), float(x[n2]), ok, rn)
                except SolverError as exc:
                    pt, reason = None, f"solver error: {exc}"
            if pt is not None:
                break
            h /= 2.0
        if pt is None:
            branch.stop_reason = f"truncated after {settings.max_bisections} bisections: {reason}"
            break
        branch.points.append(pt)
        if pt.amplitude > settings.max_amplitude:
            branch.stop_reason = "amplitude cap reached"
            break
    else:
        branch.stop_reason = "max_points reached"
    if len(branch.points) >= 3:
        branch.direction = detect_direction(branch).verdict
    return branch


@dataclass(frozen=True)
class DirectionVerdict:
    verdict: str
    samples: list[tuple[float, float]]


def detect_direction(branch: Branch, n_samples: int = 3) -> DirectionVerdict:
    """Sign of ``η(ε) = t(ε) - t1`` over the smallest-``ε`` points."""
    if len(branch.points) < 3:
        raise ValueError(f"need at least 3 branch points, got {len(branch.points)}")
    pts = sorted(branch.points, key=lambda p: p.epsilon)[:n_samples]
    samples = [(p.epsilon, p.t - branch.t1) for p in pts]
    etas = np.array([s[1] for s in samples])
    if np.all(etas > 0):
        verdict = SUPERCRITICAL
    elif np.all(etas < 0):
        verdict = SUBCRITICAL
    else:
        verdict = UNDETERMINED
    return DirectionVerdict(verdict, samples)
