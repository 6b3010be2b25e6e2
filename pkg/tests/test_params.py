import math

import pytest
from hypothesis import given, settings
from scipy.optimize import bisect

from bubblespec.params import (EquilibriumError, ParameterError, PhysicalParams, air_water,
                               gamma_sum_limit, mass_for_radius, mode_arrays, mode_constants,
                               solve_equilibrium)

from conftest import equilibria, make_eq, physical_params


def test_rejects_inconsistent_gamma():
    with pytest.raises(ParameterError):
        air_water().replace(gamma=1.41)


@pytest.mark.parametrize("name,value", [("kappa", 0.0), ("rho_l", -1.0), ("sigma", -0.1),
                                        ("mu_l", -1e-3), ("T_inf", float("nan"))])
def test_rejects_invalid_values(name, value):
    with pytest.raises(ParameterError):
        air_water().replace(**{name: value})


def test_rejects_gamma_not_above_one():
    with pytest.raises(ParameterError):
        PhysicalParams(kappa=1.0, gamma=1.0, c_v=1.0, R_g=0.0, T_inf=1.0, p_inf_star=1.0,
                       sigma=0.0, mu_l=0.0, rho_l=1.0)


@pytest.mark.parametrize("M", [0.0, -1.0, float("inf")])
def test_rejects_bad_mass(M):
    with pytest.raises(ParameterError):
        solve_equilibrium(air_water(), M)


@given(equilibria())
@settings(max_examples=100, deadline=None)
def test_equilibrium_identities(eq):
    p = eq.params
    assert math.isclose(4.0 * math.pi / 3.0 * eq.rho_star * eq.R_star ** 3, eq.M, rel_tol=1e-12)
    assert math.isclose(p.R_g * p.T_inf * eq.rho_star, p.p_inf_star + 2.0 * p.sigma / eq.R_star,
                        rel_tol=1e-12)
    assert eq.b > 0.0 and eq.d > 0.0


def test_zero_surface_tension_closed_form():
    p = air_water().replace(sigma=0.0)
    M = 3.3e-15
    eq = solve_equilibrium(p, M)
    R = (3.0 * M * p.R_g * p.T_inf / (4.0 * math.pi * p.p_inf_star)) ** (1.0 / 3.0)
    assert math.isclose(eq.R_star, R, rel_tol=1e-14)
    assert math.isclose(eq.rho_star, p.p_inf_star / (p.R_g * p.T_inf), rel_tol=1e-14)


def test_doubling_pressure_shrinks_radius():
    p = air_water()
    M = mass_for_radius(p, 2e-5)
    assert solve_equilibrium(p.replace(p_inf_star=2 * p.p_inf_star), M).R_star \
        < solve_equilibrium(p, M).R_star


@given(physical_params(), equilibria())
@settings(max_examples=50, deadline=None)
def test_radius_matches_bisection(p, other):
    M = other.M
    rhs = 3.0 * M * p.R_g * p.T_inf / (4.0 * math.pi)
    hi = 2.0 * (rhs / p.p_inf_star) ** (1.0 / 3.0)
    oracle = bisect(lambda r: p.p_inf_star * r ** 3 + 2 * p.sigma * r ** 2 - rhs, 0.0, hi,
                    xtol=1e-300, rtol=1e-15, maxiter=2000)
    assert math.isclose(solve_equilibrium(p, M).R_star, oracle, rel_tol=1e-12)


def test_mass_for_radius_round_trip():
    p = air_water()
    for R in (1e-6, 1e-5, 1e-3):
        assert math.isclose(solve_equilibrium(p, mass_for_radius(p, R)).R_star, R, rel_tol=1e-13)


def test_derived_constants(eq):
    p = eq.params
    assert math.isclose(eq.chi, p.kappa / (p.c_p * eq.rho_star), rel_tol=1e-15)
    assert math.isclose(eq.kappa_bar, eq.chi / eq.R_star ** 2, rel_tol=1e-15)
    assert math.isclose(eq.theta_gamma, 1.0 - 1.0 / p.gamma, rel_tol=1e-15)
    assert math.isclose(eq.b, 3 * p.p_inf_star / (p.rho_l * eq.R_star ** 2)
                        + 4 * p.sigma / (p.rho_l * eq.R_star ** 3), rel_tol=1e-14)


def test_units_scale_as_expected(eq):
    # kappa_bar ~ 1/s and b ~ 1/s^2: rescale the time unit by s and compare
    s = 7.0
    p = eq.params
    # kappa [W/(m K)] ~ 1/s^3, p [Pa] ~ 1/s^2, sigma ~ 1/s^2, mu ~ 1/s, R_g, c_v ~ 1/s^2
    q = PhysicalParams(kappa=p.kappa / s ** 3, gamma=p.gamma, c_v=p.c_v / s ** 2,
                       R_g=p.R_g / s ** 2, T_inf=p.T_inf, p_inf_star=p.p_inf_star / s ** 2,
                       sigma=p.sigma / s ** 2, mu_l=p.mu_l / s, rho_l=p.rho_l)
    e2 = solve_equilibrium(q, eq.M)
    assert math.isclose(e2.R_star, eq.R_star, rel_tol=1e-13)
    assert math.isclose(e2.kappa_bar, eq.kappa_bar / s, rel_tol=1e-13)
    assert math.isclose(e2.b, eq.b / s ** 2, rel_tol=1e-13)


def test_mode_constants_examples(eq):
    lam1, g1, _ = mode_constants(eq, 1)
    lam2, g2, _ = mode_constants(eq, 2)
    assert lam1 == math.pi ** 2 and lam2 == 4 * math.pi ** 2
    assert math.isclose(g2, -g1 / 2, rel_tol=1e-15)
    g = eq.params.gamma
    assert math.isclose(g1, 2 * math.sqrt(2) * (g - 1) / (math.sqrt(math.pi) * g), rel_tol=1e-15)


def test_mode_constant_e_is_limit_of_finite_coupling(eq):
    lam, _, e = mode_constants(eq, 3)
    g = eq.params.gamma
    assert math.isclose(e, g * eq.a_coupling * eq.kappa_bar * lam, rel_tol=1e-14)


@pytest.mark.parametrize("j", [0, -1, 1.5, True])
def test_mode_constants_rejects_bad_index(eq, j):
    with pytest.raises(ParameterError):
        mode_constants(eq, j)


@given(physical_params())
@settings(max_examples=30, deadline=None)
def test_gamma_sum_tail_bound(p):
    eq = solve_equilibrium(p, mass_for_radius(p, 1e-5))
    g = p.gamma
    for N in (1, 2, 5, 17, 100, 1000):
        _, gam = mode_arrays(eq, N)
        gap = gamma_sum_limit(g) - float(gam @ gam)
        assert 0.0 < gap <= 8 * (g - 1) ** 2 / (math.pi * g * g) / N


def test_bracket_failure_raises(monkeypatch):
    import bubblespec.params as mod
    monkeypatch.setattr(mod, "_solve_radius", lambda p, M: (_ for _ in ()).throw(EquilibriumError("x")))
    with pytest.raises(EquilibriumError):
        mod.solve_equilibrium(air_water(), 1e-15)


def test_equilibrium_is_hashable_value():
    assert make_eq(1e-5) == make_eq(1e-5)
    assert hash(make_eq(1e-5)) == hash(make_eq(1e-5))
