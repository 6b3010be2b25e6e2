import math

import numpy as np
import pytest
from scipy.linalg import expm

from bubblespec.linear_operator import build_operator
from bubblespec.nonlinear_dynamics import ForcingSpec, evolve_nonlinear, unforced
from bubblespec.periodic_orbit import (PeriodicOrbitError, convergence_to_orbit,
                                       find_periodic, floquet_multipliers, orbit_at,
                                       poincare_map)
from bubblespec.spectrum import rate_lower_bound
from bubblespec.state import GalerkinState, random_state, scaled_norm, state_scales

N = 8
TOL = 1e-9


@pytest.fixture(scope="module")
def forcing(eq):
    omega = build_operator(eq, N).abscissa().imag
    return ForcingSpec(omega, 1e-5 * eq.params.p_inf_star)


@pytest.fixture(scope="module")
def sol(eq, forcing):
    return find_periodic(forcing, eq, tol=TOL, N=N)


def _scaled(eq, v):
    return scaled_norm(v, state_scales(eq, N))


def test_zero_amplitude_gives_rest(eq):
    s = find_periodic(unforced(2e6), eq, N=N, with_floquet=False)
    assert np.all(s.w0.to_vector() == 0.0) and s.residual == 0.0


def test_unforced_multipliers_are_exponentials(eq):
    s = find_periodic(unforced(2e6), eq, N=N)
    L = build_operator(eq, N)
    expect = np.exp(L.eigenvalues() * s.period)
    expect = expect[np.argsort(-np.abs(expect))]
    got = np.array(s.floquet)
    assert np.allclose(np.abs(got[:4]), np.abs(expect[:4]), rtol=1e-6)
    assert np.all(np.abs(got) <= np.abs(expect[0]) * (1 + 1e-6) + 1e-8)


def test_map_of_rest_is_rest(eq):
    f = unforced(2e6)
    assert np.all(poincare_map(GalerkinState.zeros(N), f, eq).to_vector() == 0.0)


def test_unforced_map_contracts_like_linear_flow(eq):
    f = unforced(2e6)
    w0 = random_state(eq, N, np.random.default_rng(0), amplitude=1e-4)
    pw = poincare_map(w0, f, eq).to_vector()
    lin = expm(build_operator(eq, N).matrix * f.period) @ w0.to_vector()
    assert _scaled(eq, pw) < _scaled(eq, w0.to_vector())
    assert _scaled(eq, pw - lin) <= 1e-2 * _scaled(eq, lin)


def test_map_composition(eq, forcing):
    w0 = random_state(eq, N, np.random.default_rng(1), amplitude=1e-4)
    twice = poincare_map(poincare_map(w0, forcing, eq), forcing, eq).to_vector()
    direct = evolve_nonlinear(w0, forcing, 2 * forcing.period, 1e-12, eq, n_out=3).states[-1]
    assert _scaled(eq, twice - direct.to_vector()) <= 1e-9 * _scaled(eq, twice)


def test_fixed_point_residual(eq, forcing, sol):
    amp = forcing.amplitude / eq.p_star
    target = TOL * (_scaled(eq, sol.w0.to_vector()) + amp)
    assert sol.residual <= target
    again = poincare_map(sol.w0, forcing, eq).to_vector()
    assert _scaled(eq, again - sol.w0.to_vector()) <= target
    assert sol.quadrature_defect < 1e-8


def test_orbit_closes(eq, sol):
    v = sol.orbit.vectors()
    amp = sol.forcing.amplitude / eq.p_star
    assert _scaled(eq, v[-1] - v[0]) <= TOL * (_scaled(eq, v[0]) + amp)
    assert np.allclose(orbit_at(sol, [0.0])[0], orbit_at(sol, [sol.period])[0])


def test_picard_and_newton_agree(eq, forcing, sol):
    newton = find_periodic(forcing, eq, tol=TOL, N=N, method="newton", with_floquet=False)
    assert newton.method == "newton"
    diff = _scaled(eq, newton.w0.to_vector() - sol.w0.to_vector())
    assert diff <= 10 * TOL * (_scaled(eq, sol.w0.to_vector()) + forcing.amplitude / eq.p_star)


def test_multipliers_inside_disk_and_paired(sol):
    m = np.array(sol.floquet)
    assert np.all(np.abs(m) < 1.0)
    assert np.all(np.diff(np.abs(m)) <= 1e-15)
    for z in m[np.abs(m.imag) > 1e-12 * np.abs(m)]:
        assert np.min(np.abs(m - z.conjugate())) <= 1e-8 * abs(z)


def test_leading_multiplier_against_spectrum(eq, sol):
    alpha = build_operator(eq, N).abscissa().real
    rate = math.log(abs(sol.floquet[0])) / sol.period
    assert abs(rate - alpha) <= 0.1 * abs(alpha)
    assert -rate >= rate_lower_bound(eq).beta
    assert math.isclose(sol.contraction_rate, -rate, rel_tol=1e-12)


def test_recomputed_multipliers_match(eq, sol):
    assert np.allclose(floquet_multipliers(sol, eq), sol.floquet, rtol=1e-10, atol=1e-14)


def test_response_scales_with_amplitude(eq, forcing, sol):
    small = find_periodic(ForcingSpec(forcing.omega, forcing.amplitude / 10), eq, tol=TOL, N=N,
                          with_floquet=False)
    r1 = _scaled(eq, sol.w0.to_vector()) / forcing.amplitude
    r2 = _scaled(eq, small.w0.to_vector()) / (forcing.amplitude / 10)
    assert abs(r1 / r2 - 1.0) < 0.05


def test_zero_perturbation(eq, sol):
    assert convergence_to_orbit(sol, GalerkinState.zeros(N), sol.period, eq) == 0.0


def test_perturbed_trajectory_returns(eq, sol):
    beta = rate_lower_bound(eq).beta
    pert = random_state(eq, N, np.random.default_rng(2), amplitude=1e-4)
    rate = convergence_to_orbit(sol, pert, 10.0 / beta, eq)
    lin = -build_operator(eq, N).abscissa().real
    assert rate >= beta
    assert abs(rate - lin) <= 0.1 * lin


def test_large_amplitude_fails(eq, forcing):
    with pytest.raises(PeriodicOrbitError):
        find_periodic(ForcingSpec(forcing.omega, 0.5 * eq.params.p_inf_star), eq, N=N,
                      with_floquet=False, max_picard=5)


def test_rejects_unknown_method(eq, forcing):
    with pytest.raises(ValueError):
        find_periodic(forcing, eq, N=N, method="secant")
