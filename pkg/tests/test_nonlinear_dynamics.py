import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubblespec.linear_evolution import evolve_linear
from bubblespec.linear_operator import build_operator
from bubblespec.nonlinear_dynamics import (CollapseError, ForcingSpec, RegimeExit,
                                           assemble_rhs, evolve_nonlinear, forcing_term,
                                           get_model, nonlinear_terms, physical_mass,
                                           reconstruct_physical, unforced, z_from_state)
from bubblespec.params import mode_arrays
from bubblespec.spectrum import rate_lower_bound
from bubblespec.state import GalerkinState, random_state, scaled_norm, state_scales

N = 16


def _state(eq, size, seed=0):
    return random_state(eq, N, np.random.default_rng(seed), amplitude=size)


def test_forcing_spec_validation():
    with pytest.raises(ValueError):
        ForcingSpec(omega=0.0, amplitude=1.0)
    with pytest.raises(ValueError):
        ForcingSpec(omega=1.0, amplitude=float("nan"))
    with pytest.raises(ValueError):
        ForcingSpec(omega=1.0, amplitude=1.0, waveform="square")


@given(st.floats(1e-2, 1e7), st.floats(-1e4, 1e4), st.floats(0.0, 50.0), st.sampled_from(["cos", "sin"]))
@settings(max_examples=50)
def test_forcing_is_periodic(omega, amp, t, shape):
    f = ForcingSpec(omega, amp, shape)
    t = t / omega
    assert abs(f.psi(t + f.period) - f.psi(t)) <= 1e-9 * max(abs(amp), 1e-300)
    assert abs(f.psi(t)) <= abs(amp)


def test_forcing_vanishes_with_amplitude():
    sups = [max(abs(ForcingSpec(3.0, a).psi(t)) for t in np.linspace(0, 3, 50)) for a in (1.0, 1e-3, 0.0)]
    assert sups[0] > sups[1] > sups[2] == 0.0


@pytest.mark.parametrize("t", [0.0, 1e-7, 3.3e-5])
def test_equilibrium_is_fixed_point(eq, t):
    assert np.all(assemble_rhs(t, GalerkinState.zeros(N), unforced(), eq) == 0.0)


def test_response_to_forcing_at_rest(eq):
    f = ForcingSpec(omega=2e6, amplitude=150.0)
    for t in (0.0, 1e-7, 2.5e-6):
        got = assemble_rhs(t, GalerkinState.zeros(N), f, eq)
        expect = np.zeros(N + 2)
        expect[1] = -f.psi(t) / (eq.params.rho_l * eq.R_star)
        assert np.array_equal(got, expect)
        assert np.array_equal(forcing_term(t, f, eq, N), expect)


def test_jacobian_matches_operator(eq):
    model = get_model(eq, N)
    s = model.scales
    J = np.empty((N + 2, N + 2))
    for k in range(N + 2):
        e = np.zeros(N + 2)
        e[k] = 1e-7 * s[k]
        J[:, k] = (model.rhs(0.0, e) - model.rhs(0.0, -e)) / (2 * e[k])
    L = build_operator(eq, N).matrix
    nz = L != 0.0
    assert np.max(np.abs(J - L)[nz] / np.abs(L)[nz]) <= 1e-5
    assert np.all(J[~nz] == 0.0)


def test_quadratic_smallness(eq):
    model = get_model(eq, N)
    s = model.scales
    L = model.L
    ratios = []
    for size in (1e-2, 1e-3, 1e-4):
        v = _state(eq, size).to_vector()
        rem = model.rhs(0.0, v) - L @ v
        ratios.append(scaled_norm(rem, s) / scaled_norm(v, s) ** 2)
    # bounded over the decades; cubic terms still show at 1e-2
    assert max(ratios) / min(ratios) < 3.0
    assert abs(ratios[1] / ratios[2] - 1.0) < 0.1


def test_split_scaling(eq):
    s = state_scales(eq, N)
    c0, c1 = [], []
    for size in (1e-2, 1e-3, 1e-4):
        w = _state(eq, size, seed=3)
        N1, N0 = nonlinear_terms(w, eq)
        n = scaled_norm(w.to_vector(), s)
        c1.append(np.linalg.norm(N1, 2) / n)
        c0.append(scaled_norm(N0, s) / n ** 2)
    assert max(c1) / min(c1) < 1.2
    assert max(c0) / min(c0) < 1.2


def test_split_reproduces_rhs(eq):
    # dense solve of (I - N1) w' = L w + N0 + f against the closed-form solve
    f = ForcingSpec(omega=2e6, amplitude=500.0)
    model = get_model(eq, N)
    rng = np.random.default_rng(4)
    for _ in range(5):
        v = random_state(eq, N, rng, amplitude=1e-2).to_vector()
        N1, N0 = model.split(v)
        t = rng.uniform(0, f.period)
        dense = np.linalg.solve(np.eye(N + 2) - N1, model.L @ v + N0 + model.forcing_vector(f.psi(t)))
        direct = model.rhs(t, v, f.psi(t))
        assert scaled_norm(dense - direct, model.scales) <= 1e-12 * scaled_norm(direct, model.scales)


def test_contraction_norm_is_spectral_norm(eq):
    model = get_model(eq, N)
    v = _state(eq, 5e-2, seed=6).to_vector()
    N1, _ = model.split(v)
    assert math.isclose(model.contraction_norm(v), np.linalg.norm(N1, 2), rel_tol=1e-10)


def test_guard_trips_for_large_state(eq):
    model = get_model(eq, N)
    v = np.zeros(N + 2)
    v[0] = -0.6 * eq.R_star
    with pytest.raises(RegimeExit):
        model.rhs(0.0, v)


def test_collapse(eq):
    w = GalerkinState(-eq.R_star, 0.0, np.zeros(N))
    with pytest.raises(CollapseError):
        z_from_state(w, eq)
    with pytest.raises(CollapseError):
        get_model(eq, N).rhs(0.0, w.to_vector())


def test_z_of_zero_state(eq):
    assert z_from_state(GalerkinState.zeros(N), eq) == 0.0


@pytest.mark.parametrize("x", [1e-3, -1e-4, 1e-5])
def test_z_taylor_expansion(eq, x):
    w = GalerkinState(x * eq.R_star, 0.0, np.zeros(N))
    z = z_from_state(w, eq)
    lin = -3 * eq.rho_star * x
    assert abs(z - lin - 6 * eq.rho_star * x * x) <= 11 * eq.rho_star * abs(x) ** 3


def test_z_includes_mode_sum(eq):
    c = np.linspace(-1, 1, N) * 1e-3
    _, gam = mode_arrays(eq, N)
    assert math.isclose(z_from_state(GalerkinState(0.0, 0.0, c), eq),
                        -eq.a_coupling * gam @ c, rel_tol=1e-14)


def test_mass_identity(eq):
    rng = np.random.default_rng(13)
    for _ in range(20):
        w = random_state(eq, N, rng, amplitude=rng.uniform(1e-5, 1e-2))
        assert abs(physical_mass(w, eq) / eq.M - 1.0) <= 1e-10


def test_reconstruct_zero_state(eq):
    y, rho, R, Rd = reconstruct_physical(GalerkinState.zeros(N), eq)
    assert np.all(rho == eq.rho_star) and R == eq.R_star and Rd == 0.0 and y[-1] == 1.0


def test_reconstruct_wall_value(eq):
    w = _state(eq, 1e-2, seed=14)
    _, rho, R, _ = reconstruct_physical(w, eq)
    assert rho[-1] == eq.rho_star + z_from_state(w, eq)
    assert R == eq.R_star + w.R_pert


def test_reconstruct_rejects_negative_density(eq):
    c = np.zeros(N)
    c[0] = -5 * eq.rho_star
    with pytest.raises(RegimeExit):
        reconstruct_physical(GalerkinState(0.0, 0.0, c), eq)


def test_unforced_rest_stays_at_rest(eq):
    tr = evolve_nonlinear(GalerkinState.zeros(N), unforced(), 1e-6, 1e-10, eq, n_out=11)
    assert np.all(tr.vectors() == 0.0)
    assert np.all(tr.masses == tr.masses[0])


def test_rejects_nonpositive_duration(eq):
    with pytest.raises(ValueError):
        evolve_nonlinear(GalerkinState.zeros(N), unforced(), 0.0, 1e-10, eq)


def test_decay_rate_close_to_linear(eq):
    beta = rate_lower_bound(eq).beta
    w0 = _state(eq, 1e-3, seed=15)
    T = 8.0 / beta
    t = np.linspace(0.0, T, 401)
    nl = evolve_nonlinear(w0, unforced(), T, 1e-10, eq, t_out=t)
    lin = evolve_linear(build_operator(eq, N), w0, t)
    s = state_scales(eq, N)
    n_lin = np.array([scaled_norm(x.to_vector(), s) for x in lin.states])
    window = t >= 2.0 / beta
    r_nl = -np.polyfit(t[window], np.log(nl.norms[window]), 1)[0]
    r_lin = -np.polyfit(t[window], np.log(n_lin[window]), 1)[0]
    assert abs(r_nl - r_lin) <= 0.1 * r_lin
    assert abs(nl.masses / eq.M - 1.0).max() <= 1e-8


def test_forced_trace_conserves_mass(eq):
    f = ForcingSpec(omega=math.sqrt(eq.b), amplitude=1e-4 * eq.params.p_inf_star)
    tr = evolve_nonlinear(GalerkinState.zeros(N), f, 3 * f.period, 1e-10, eq, n_out=61)
    assert abs(tr.masses / eq.M - 1.0).max() <= 1e-10
    assert np.all(tr.min_densities > 0.0)
    assert np.max(tr.norms) > 0.0
