import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubblespec.params import mode_arrays
from bubblespec.spectral_basis import (default_rule, eval_dphi, eval_phi, gauss_rule,
                                       gram_matrix, mode_table, radial_integral, synthesize)


@pytest.mark.parametrize("n", [2, 8, 64, 528])
def test_weights_sum_to_ball_volume(n):
    assert math.isclose(gauss_rule(n).weights.sum(), 4 * math.pi / 3, rel_tol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 8, 32, 128])
def test_orthonormality_default_rule(N):
    assert np.max(np.abs(gram_matrix(N) - np.eye(N))) <= 1e-10


@pytest.mark.parametrize("N", [4, 8, 32, 128])
def test_orthonormality_four_nodes_per_mode(N):
    # 4N nodes are too few below N = 4, which is why the default adds 16
    assert np.max(np.abs(gram_matrix(N, gauss_rule(4 * N)) - np.eye(N))) <= 1e-10


@given(st.integers(1, 200))
def test_phi_vanishes_on_wall(j):
    assert eval_phi(j, 1.0) == 0.0


def test_phi_limit_at_center():
    assert math.isclose(eval_phi(1, 0.0), math.pi / math.sqrt(2 * math.pi), rel_tol=1e-15)
    assert math.isclose(eval_phi(3, 1e-9), 3 * math.pi / math.sqrt(2 * math.pi), rel_tol=1e-15)
    # just above the series threshold the direct formula agrees
    assert math.isclose(eval_phi(3, 2e-8), eval_phi(3, 0.0), rel_tol=1e-12)


def test_phi_array_matches_scalar():
    y = np.linspace(0.0, 1.0, 11)
    assert np.allclose(eval_phi(4, y), [eval_phi(4, float(v)) for v in y], rtol=0, atol=1e-15)


@pytest.mark.parametrize("y", [-0.1, 1.1, float("nan")])
def test_phi_domain(y):
    with pytest.raises(ValueError):
        eval_phi(1, y)


def test_phi_rejects_mode_zero():
    with pytest.raises(ValueError):
        eval_phi(0, 0.5)


@given(st.integers(1, 40), st.floats(1e-3, 1.0))
@settings(max_examples=60)
def test_dphi_matches_central_difference(j, y):
    h = 1e-6
    lo, hi = max(y - h, 0.0), min(y + h, 1.0)
    fd = (eval_phi(j, hi) - eval_phi(j, lo)) / (hi - lo)
    assert abs(eval_dphi(j, y) - fd) <= 1e-5 * (j * math.pi) ** 2


def test_dphi_at_center_is_zero():
    assert eval_dphi(5, 0.0) == 0.0


def test_radial_integral_constant():
    assert math.isclose(radial_integral(lambda y: np.ones_like(y), default_rule(4)),
                        4 * math.pi / 3, rel_tol=1e-12)


def test_radial_integral_orthogonal_pair():
    rule = default_rule(2)
    assert abs(radial_integral(lambda y: eval_phi(1, y) * eval_phi(2, y), rule)) < 1e-10
    assert abs(radial_integral(lambda y: eval_phi(1, y) ** 2, rule) - 1.0) < 1e-10


def test_radial_integral_rejects_nonfinite():
    rule = default_rule(1)
    with pytest.raises(ValueError):
        radial_integral(np.full(rule.size, np.nan), rule)
    with pytest.raises(ValueError):
        radial_integral(np.zeros(rule.size + 1), rule)


def _trapezoid_ball(f, n=400001):
    y = np.linspace(0.0, 1.0, n)
    return 4 * math.pi * np.trapezoid(f(y) * y * y, y)


def test_integral_of_phi1_against_trapezoid(eq):
    got = radial_integral(lambda y: eval_phi(1, y), default_rule(1))
    assert abs(got - _trapezoid_ball(lambda y: eval_phi(1, y))) < 1e-10
    g = eq.params.gamma
    _, gam = mode_arrays(eq, 1)
    assert abs(got - g / (g - 1) * gam[0]) < 1e-10


def test_gamma_equals_scaled_integral(eq):
    N = 24
    t = mode_table(N)
    g = eq.params.gamma
    _, gam = mode_arrays(eq, N)
    ints = t.rule.weights @ t.phi
    assert np.max(np.abs(gam - (g - 1) / g * ints)) < 1e-10


def test_table_matches_pointwise():
    t = mode_table(5)
    assert np.allclose(t.phi[:, 2], eval_phi(3, t.rule.nodes), rtol=1e-13, atol=1e-13)
    assert np.allclose(t.dphi[:, 4], eval_dphi(5, t.rule.nodes), rtol=1e-13, atol=1e-12)


def test_synthesize_boundary_and_linearity():
    c = np.array([0.3, -1.2, 0.7])
    assert abs(synthesize(c, 1.0)[0]) < 1e-15
    y = np.linspace(0, 1, 7)
    assert np.allclose(synthesize(2 * c, y), 2 * synthesize(c, y))


def test_gradient_identity():
    # int grad phi_j . grad phi_k = lambda_j delta_jk
    N = 6
    t = mode_table(N)
    G = t.dphi.T @ (t.rule.weights[:, None] * t.dphi)
    assert np.max(np.abs(G - np.diag(t.lam))) < 1e-9 * t.lam[-1]
