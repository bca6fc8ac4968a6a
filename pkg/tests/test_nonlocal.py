from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_logistic import ConfigurationError, HypothesisViolation, KernelSpec, ReactionSpec, build_grid
from nonlocal_logistic.nonlocal_terms import (
    apply_phi,
    check_kernel_class,
    check_phi_bound,
    kernel_quadratic_form,
    derivative_defect,
    homogeneity_defect,
    kernel_matrix,
    lower_bound_margin,
)

G1 = build_grid(1, (0, np.pi), 128)
KERNELS = [
    KernelSpec("constant", [1.0]),
    KernelSpec("separable", [2.0, 1.0, 0.5, 1.0, 0.2]),
    KernelSpec("gaussian", [1.5, 0.7]),
    KernelSpec("indicator-band", [1.0, 0.5]),
]
REACTIONS = [
    ReactionSpec("power", 1.5),
    ReactionSpec("mixed", 2.0, mu=0.5),
    ReactionSpec("weighted", 3.0, c1=0.7, c2=1.3),
]


def test_constant_kernel_row_sums():
    M = kernel_matrix(KernelSpec("constant", [1.0]), G1)
    assert np.max(np.abs(M.row_sums() - np.pi)) <= 2 * G1.h[0]
    np.testing.assert_allclose(M.dense.sum(axis=1), M.row_sums())


def test_zero_kernel_rejected():
    with pytest.raises(HypothesisViolation):
        kernel_matrix(KernelSpec("constant", [0.0]), G1)


def test_negative_kernel_rejected():
    with pytest.raises(HypothesisViolation):
        kernel_matrix(KernelSpec("separable", [1.0, -1.0, 1.0, 1.0, 0.0]), G1)


def test_band_sparsity():
    g = build_grid(1, (0, 1), 100)
    M = kernel_matrix(KernelSpec("indicator-band", [1.0, 0.2]), g).dense
    x = g.axis_coords(0)
    far = np.abs(x[:, None] - x[None, :]) >= 0.2
    assert np.all(M[far] == 0)
    assert np.all(M[~far] > 0)


@pytest.mark.parametrize("spec", KERNELS)
def test_low_rank_matvec_matches_dense(spec):
    M = kernel_matrix(spec, G1)
    w = np.random.default_rng(0).uniform(size=G1.size)
    np.testing.assert_allclose(M.matvec(w), M.dense @ w, rtol=1e-13, atol=1e-13)


def test_weights_folded_in():
    g = build_grid(2, ((0, 1), (0, 2)), (5, 6))
    spec = KernelSpec("gaussian", [1.0, 0.5])
    x = g.nodes
    raw = np.exp(-np.sum((x[:, None] - x[None]) ** 2, axis=-1) / 0.25)
    np.testing.assert_allclose(kernel_matrix(spec, g).dense, raw * g.h[0] * g.h[1])


def test_apply_phi_examples():
    M = kernel_matrix(KernelSpec("constant", [1.0]), G1)
    f = ReactionSpec("power", 1)
    zero = np.zeros(G1.size)
    assert np.all(apply_phi(M, f, zero, zero) == 0)
    ones = np.ones(G1.size)
    assert np.max(np.abs(apply_phi(M, f, ones, ones) - np.pi)) <= 2 * G1.h[0]


def test_apply_phi_nested_quadrature_oracle():
    spec = KernelSpec("gaussian", [1.0, 0.8])
    M = kernel_matrix(spec, G1)
    f = ReactionSpec("mixed", 2.0, mu=1.0)
    x = G1.axis_coords(0)
    u, v = np.sin(x), x * (np.pi - x)
    h = G1.h[0]
    ref = np.array([sum(np.exp(-((xi - xj) ** 2) / 0.64) * (u[j] ** 2 + v[j] * u[j]) * h for j, xj in enumerate(x)) for xi in x])
    np.testing.assert_allclose(apply_phi(M, f, u, v), ref, rtol=1e-12)


def test_homogeneity_example():
    rng = np.random.default_rng(1)
    M = kernel_matrix(KernelSpec("gaussian", [1.0, 1.0]), G1)
    f = ReactionSpec("power", 1.5)
    u, v = rng.uniform(0.1, 2, G1.size), rng.uniform(0.1, 2, G1.size)
    base = apply_phi(M, f, u, v)
    np.testing.assert_allclose(apply_phi(M, f, 2 * u, 2 * v), 2**1.5 * base, rtol=1e-12)


@pytest.mark.parametrize("spec", KERNELS)
@pytest.mark.parametrize("f", REACTIONS)
def test_homogeneity_all_families(spec, f):
    rng = np.random.default_rng(2)
    M = kernel_matrix(spec, G1)
    u, v = rng.uniform(0, 3, G1.size), rng.uniform(0, 3, G1.size)
    for xi in (0.5, 2.0, 7.0):
        assert homogeneity_defect(M, f, u, v, xi) <= 1e-12


@pytest.mark.parametrize("f", REACTIONS)
def test_lower_bound_lattice(f):
    assert lower_bound_margin(f) >= 0


def test_eps0_values():
    assert ReactionSpec("power", 2).eps0 == 1
    assert ReactionSpec("mixed", 2, mu=1).eps0 == 1
    assert ReactionSpec("weighted", 2, c1=0.3, c2=1).eps0 == 0.3


@pytest.mark.parametrize("f", REACTIONS + [ReactionSpec("mixed", 2.5, mu=2.5), ReactionSpec("weighted", 1.0, c1=0, c2=1)])
def test_derivatives_match_finite_differences(f):
    rng = np.random.default_rng(3)
    own, other = rng.uniform(0.05, 4, 200), rng.uniform(0.05, 4, 200)
    assert derivative_defect(f, own, other) <= 1e-6


@pytest.mark.parametrize(
    "kw",
    [dict(family="cubic", gamma=1), dict(family="power", gamma=0), dict(family="mixed", gamma=1, mu=2),
     dict(family="weighted", gamma=1, c1=0, c2=0), dict(family="weighted", gamma=1, c1=-1, c2=2)],
)
def test_reaction_validation(kw):
    with pytest.raises(ConfigurationError):
        ReactionSpec(**kw)


def test_kernel_class_constant():
    rep = check_kernel_class(KernelSpec("constant", [1.0]), G1, 3 * G1.h[0])
    assert rep.passed and rep.witness[0] == rep.witness[1]


def test_kernel_class_band():
    g = build_grid(1, (0, 1), 256)
    assert check_kernel_class(KernelSpec("indicator-band", [1.0, 0.2]), g, 0.1).passed


def test_kernel_class_product_off_axes():
    g = build_grid(1, (0, 1), 256)
    assert check_kernel_class(KernelSpec("separable", [1, 0, 1, 0, 1]), g, 0.05).passed


def test_kernel_class_zero_kernel_fails():
    rep = check_kernel_class(KernelSpec("constant", [0.0]), G1, 0.2)
    assert not rep.passed and rep.failing_node == 0


def test_kernel_class_negative_kernel_fails():
    rep = check_kernel_class(KernelSpec("separable", [-1, 1, 0, 1, 0]), G1, 0.2)
    assert not rep.nonnegative and not rep.passed


def test_kernel_class_needs_resolvable_ball():
    with pytest.raises(ConfigurationError):
        check_kernel_class(KernelSpec("constant", [1.0]), G1, G1.h[0])


def test_kernel_class_local_support_detected():
    # K vanishes on the left half of the domain, so balls there have no positive pair
    g = build_grid(1, (0, 1), 64)
    x = g.axis_coords(0)
    tab = np.outer(x > 0.5, x > 0.5).astype(float)
    rep = check_kernel_class(KernelSpec("tabulated", tab), g, 0.1)
    assert not rep.passed and x[rep.failing_node] < 0.5


def test_kernel_quadratic_form():
    M = kernel_matrix(KernelSpec("constant", [1.0]), G1)
    assert kernel_quadratic_form(M, 1.0, np.zeros(G1.size)) == 0
    assert abs(kernel_quadratic_form(M, 1.0, np.ones(G1.size)) - np.pi**2) <= 4 * np.pi * G1.h[0]
    w = np.random.default_rng(4).uniform(0, 1, G1.size)
    w /= w.max()
    assert kernel_quadratic_form(M, 1.0, w) > 0


def test_phi_bound_examples():
    M = kernel_matrix(KernelSpec("constant", [1.0]), G1)
    f = ReactionSpec("power", 1)
    zero = np.zeros(G1.size)
    assert check_phi_bound(M, f, zero, zero) == (0.0, 0.0)
    val, bound = check_phi_bound(M, f, np.ones(G1.size), np.ones(G1.size))
    assert abs(val - np.pi) <= 2 * G1.h[0] and bound == pytest.approx(np.pi)


def test_phi_bound_random_gaussian():
    rng = np.random.default_rng(5)
    M = kernel_matrix(KernelSpec("gaussian", [2.0, 0.5]), G1)
    f = ReactionSpec("weighted", 2, c1=1, c2=0.5)
    for _ in range(50):
        u, v = rng.uniform(0, 2, G1.size), rng.uniform(0, 2, G1.size)
        val, bound = check_phi_bound(M, f, u, v)
        assert val <= bound + 2 * G1.h[0] * np.max(f(u, v))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(0, 3), r=st.integers(0, 2))
def test_kernel_action_monotone(seed, k, r):
    rng = np.random.default_rng(seed)
    M = kernel_matrix(KERNELS[k], G1)
    f = REACTIONS[r]
    u = rng.uniform(0, 2, G1.size)
    v = rng.uniform(0, 2, G1.size)
    bump = u + rng.uniform(0, 1, G1.size)
    assert np.all(apply_phi(M, f, bump, v) >= apply_phi(M, f, u, v) - 1e-13)


@settings(max_examples=40, deadline=None)
@given(
    gamma=st.fractions(min_value=0.25, max_value=6),
    xi=st.floats(0.05, 20),
    t=st.floats(0, 50),
    s=st.floats(0, 50),
)
def test_reaction_homogeneity_pointwise(gamma, xi, t, s):
    for f in (ReactionSpec("power", gamma), ReactionSpec("mixed", gamma, mu=float(gamma) / 2),
              ReactionSpec("weighted", gamma, c1=1, c2=2)):
        lhs = f(xi * t, xi * s)
        rhs = xi ** float(gamma) * f(t, s)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)
        assert f(t, s) >= 0
