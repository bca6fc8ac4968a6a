"""
Leading-order direction of the bifurcating branch.

Near onset the branch has the form ``t = t1 + η(ε)``, ``U = εV + ερ(ε)`` and
``η(ε) / ε^δ`` tends to a limit determined by which of ``γ, p-1, q-1`` is
smallest.  This module evaluates those limits by quadrature and compares them
with the measured ``η`` along a computed branch.

Projections use the adjoint null vector ``W`` (see
:class:`~nonlocal_logistic.continuation.BifurcationSeed`), which coincides with
``V`` for a symmetric coupling matrix without linear advection.

For the two advection-only cases the closed form can be written either as a
gradient integral or, after integrating by parts, as an integral of
``φ^(m+1) div(field)``.  The two expressions in circulation differ in sign, so
both candidates are reported and the computed branch decides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .continuation import Branch, BifurcationSeed
from .errors import ConfigurationError
from .geometry import Grid, divergence, gradient, inner, integrate
from .nonlocal_terms import apply_phi
from .system import LINEAR, ProblemSpec, State, nonlinear_terms

__all__ = [
    "CASES",
    "DirectionReport",
    "EtaLimit",
    "EtaSample",
    "delta_exponent",
    "direction_case",
    "transversality_denominator",
    "eta_limit",
    "empirical_eta",
    "direction_report",
]

CASES = {
    1: "delta = gamma < p-1, q-1",
    2: "delta = gamma = p-1 < q-1",
    3: "delta = gamma = q-1 < p-1",
    4: "delta = gamma = p-1 = q-1",
    5: "delta = p-1 = q-1 < gamma",
    6: "delta = q-1 < p-1, gamma",
    7: "delta = p-1 < q-1, gamma",
}
_NONLOCAL_CASES = {1, 2, 3, 4}
_ALPHA_CASES = {2, 4, 5, 7}
_BETA_CASES = {3, 4, 5, 6}

FORMULA = "formula-consistent"
ALT_SIGN = "alt-sign-consistent"
INCONSISTENT = "inconsistent"


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def delta_exponent(gamma, p, q) -> tuple[Fraction, int]:
    """``δ = min(γ, p-1, q-1)`` and the case number of the tie pattern.

    Comparisons are exact; pass :class:`~fractions.Fraction` values for
    rational exponents.

    >>> delta_exponent(2, 3, 3)
    (Fraction(2, 1), 4)
    """
    g, pm, qm = _exact(gamma), _exact(p) - 1, _exact(q) - 1
    if g <= 0 or pm < 0 or qm < 0:
        raise ValueError("need gamma > 0 and p, q >= 1")
    delta = min(g, pm, qm)
    pattern = (g == delta, pm == delta, qm == delta)
    case = {
        (True, False, False): 1,
        (True, True, False): 2,
        (True, False, True): 3,
        (True, True, True): 4,
        (False, True, True): 5,
        (False, False, True): 6,
        (False, True, False): 7,
    }[pattern]
    return delta, case


def direction_case(spec: ProblemSpec) -> tuple[Fraction, int]:
    """Mode-aware exponent and case.

    In linear mode the advection is part of the principal operator, so only
    the crowding term survives and ``δ = γ`` (case 1).
    """
    if spec.mode == LINEAR:
        return _exact(spec.gamma), 1
    return delta_exponent(spec.gamma, spec.p, spec.q)


def transversality_denominator(grid: Grid, A, V: State, W: State | None = None) -> float:
    """Quadrature of ``<A V, W>`` (``W`` defaults to ``V``); must be positive."""
    W = V if W is None else W
    m = A.matrix if hasattr(A, "matrix") else np.asarray(A, dtype=float)
    av_u = m[0, 0] * V.u + m[0, 1] * V.v
    av_v = m[1, 0] * V.u + m[1, 1] * V.v
    val = inner(grid, av_u, W.u) + inner(grid, av_v, W.v)
    if not val > 0:
        raise ConfigurationError(f"transversality denominator {val:.3e} is not positive; malformed V")
    return val


@dataclass(frozen=True)
class EtaLimit:
    """Candidate values of ``lim η(ε)/ε^δ``.

    ``closed_form`` follows the displayed formula for the active case;
    ``alt_sign`` flips the sign of its advection contribution.
    ``nonlocal_reference`` is the crowding contribution divided by the
    denominator whether or not that term is active.
    """

    delta: Fraction
    case_id: int
    numerator: float
    denominator: float
    closed_form: float
    alt_sign: float
    nonlocal_part: float
    advection_part: float
    gradient_form: float
    nonlocal_reference: float
    degenerate: bool


def _advection_terms(spec: ProblemSpec, seed: BifurcationSeed, which: str) -> tuple[float, float, float]:
    """Gradient form, divergence form and an absolute scale of one advection term."""
    grid = spec.grid
    phi = seed.phi
    if which == "alpha":
        vf, m, xi, zeta = spec.alpha, float(spec.p), seed.xi[0], seed.zeta[0]
    else:
        vf, m, xi, zeta = spec.beta, float(spec.q), seed.xi[1], seed.zeta[1]
    w = xi * phi
    transport = np.sum(vf.sample(grid) * gradient(grid, w), axis=0)
    grad_integrand = zeta * m * w ** (m - 1.0) * transport * seed.phi_adjoint
    div_integrand = m * xi**m * zeta / (m + 1.0) * phi ** (m + 1.0) * divergence(vf, grid)
    scale = integrate(grid, np.abs(grad_integrand)) + integrate(grid, np.abs(div_integrand))
    return integrate(grid, grad_integrand), integrate(grid, div_integrand), scale


def eta_limit(
    spec: ProblemSpec, seed: BifurcationSeed, case_id: int | None = None, zero_tol: float = 1e-10
) -> EtaLimit:
    """Closed-form candidates for the active case.

    The limit is flagged ``degenerate`` when both candidate numerators are
    below ``zero_tol`` times the quadrature of the absolute integrands, that
    is when they vanish up to cancellation error.
    """
    delta, case = direction_case(spec)
    if case_id is not None and case_id != case:
        raise ConfigurationError(f"case {case_id} requested but exponents give case {case}", "case_id")
    grid = spec.grid
    V, W = seed.V, seed.W
    den = transversality_denominator(grid, spec.A, V, W)
    phi_v = apply_phi(spec.M1, spec.f, V.u, V.v)
    psi_v = apply_phi(spec.M2, spec.g, V.v, V.u)
    nonlocal_num = integrate(
        grid,
        (seed.zeta[0] * seed.xi[0] * phi_v + seed.zeta[1] * seed.xi[1] * psi_v) * seed.phi * seed.phi_adjoint,
    )
    nl = nonlocal_num if case in _NONLOCAL_CASES else 0.0
    scale = abs(nl)
    adv_closed = 0.0
    adv_grad = 0.0
    for which, active in (("alpha", _ALPHA_CASES), ("beta", _BETA_CASES)):
        if case in active:
            g_form, d_form, s = _advection_terms(spec, seed, which)
            scale += s
            adv_grad += g_form
            # the advection-only cases use the divergence form
            adv_closed += d_form if case in (6, 7) else g_form
    closed = (nl + adv_closed) / den
    alt = (nl - adv_closed) / den
    return EtaLimit(
        delta=delta,
        case_id=case,
        numerator=nl + adv_closed,
        denominator=den,
        closed_form=closed,
        alt_sign=alt,
        nonlocal_part=nl / den,
        advection_part=adv_closed / den,
        gradient_form=(nl + adv_grad) / den,
        nonlocal_reference=nonlocal_num / den,
        degenerate=max(abs(nl + adv_closed), abs(nl - adv_closed)) <= zero_tol * scale,
    )


@dataclass(frozen=True)
class EtaSample:
    epsilon: float
    t: float
    eta: float
    ratio: float
    quotient_eta: float


def empirical_eta(branch: Branch, delta, max_epsilon: float = 0.1) -> list[EtaSample]:
    """``(ε, η, η/ε^δ)`` for branch points with ``ε <= max_epsilon``.

    ``quotient_eta`` recomputes ``η`` independently as
    ``<H(U), W> / <A U, W>``, which holds exactly for the discrete system.
    """
    spec, seed = branch.spec, branch.seed
    grid = spec.grid
    W = seed.W
    A = spec.A
    d = float(delta)
    out = []
    for pt in sorted(branch.points, key=lambda p: p.epsilon):
        if pt.epsilon > max_epsilon or pt.epsilon <= 0:
            continue
        H = nonlinear_terms(spec, pt.U)
        num = inner(grid, H.u, W.u) + inner(grid, H.v, W.v)
        AU = State(A.a * pt.U.u + A.b * pt.U.v, A.c * pt.U.u + A.d * pt.U.v)
        den = inner(grid, AU.u, W.u) + inner(grid, AU.v, W.v)
        eta = pt.t - seed.t1
        out.append(EtaSample(pt.epsilon, pt.t, eta, eta / pt.epsilon**d, num / den))
    return out


@dataclass
class DirectionReport:
    delta: Fraction
    case_id: int
    numerator_formula: float
    denominator: float
    closed_form_limit: float
    alt_sign_limit: float
    degenerate: bool
    empirical_samples: list[tuple[float, float]] = field(default_factory=list)
    empirical_limit: float = float("nan")
    empirical_direction: str = "undetermined"
    matched: str = "none"
    verdict: str = INCONSISTENT

    def as_dict(self) -> dict:
        return {
            "delta": str(self.delta),
            "case_id": self.case_id,
            "case": CASES[self.case_id],
            "numerator_formula": self.numerator_formula,
            "denominator": self.denominator,
            "closed_form_limit": self.closed_form_limit,
            "alt_sign_limit": self.alt_sign_limit,
            "degenerate": self.degenerate,
            "empirical_samples": [list(s) for s in self.empirical_samples],
            "empirical_limit": self.empirical_limit,
            "empirical_direction": self.empirical_direction,
            "matched": self.matched,
            "verdict": self.verdict,
        }


def _matches(emp: float, cand: float, rel_tol: float) -> bool:
    return cand != 0 and np.sign(emp) == np.sign(cand) and abs(emp - cand) <= rel_tol * abs(cand)


def direction_report(
    branch: Branch,
    limit: EtaLimit | None = None,
    rel_tol: float = 0.25,
    degenerate_fraction: float = 0.1,
    benchmark: float | None = None,
    max_epsilon: float = 0.1,
) -> DirectionReport:
    """Compare the closed-form candidates with the branch.

    The empirical limit is ``η/ε^δ`` at the smallest sampled ``ε``.  A
    candidate matches when it has the same sign and lies within ``rel_tol``
    relative distance.  For a degenerate (zero) closed form the branch must
    instead satisfy ``|η/ε^δ| <= degenerate_fraction * benchmark``, the
    benchmark defaulting to the crowding contribution of the same scenario.
    """
    limit = limit or eta_limit(branch.spec, branch.seed)
    samples = empirical_eta(branch, limit.delta, max_epsilon)
    rep = DirectionReport(
        limit.delta, limit.case_id, limit.numerator, limit.denominator,
        limit.closed_form, limit.alt_sign, limit.degenerate,
        [(s.epsilon, s.ratio) for s in samples],
    )
    if not samples:
        return rep
    emp = samples[0].ratio
    rep.empirical_limit = emp
    small = samples[:3]
    if all(s.eta > 0 for s in small):
        rep.empirical_direction = "supercritical"
    elif all(s.eta < 0 for s in small):
        rep.empirical_direction = "subcritical"
    if limit.degenerate:
        ref = abs(benchmark if benchmark is not None else limit.nonlocal_reference)
        ok = abs(emp) <= degenerate_fraction * ref
        rep.matched = "degenerate" if ok else "none"
        rep.verdict = FORMULA if ok else INCONSISTENT
        return rep
    mc = _matches(emp, limit.closed_form, rel_tol)
    ma = limit.alt_sign != limit.closed_form and _matches(emp, limit.alt_sign, rel_tol)
    if mc and ma:
        rep.matched, rep.verdict = "both", FORMULA
    elif mc:
        rep.matched, rep.verdict = "closed-form", FORMULA
    elif ma:
        rep.matched, rep.verdict = "alt-sign", ALT_SIGN
    return rep
