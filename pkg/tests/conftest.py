import math

import numpy as np
import pytest
from hypothesis import strategies as st

from bubblespec.params import PhysicalParams, air_water, mass_for_radius, solve_equilibrium


def make_eq(R_star=1e-5, **changes):
    p = air_water().replace(**changes) if changes else air_water()
    return solve_equilibrium(p, mass_for_radius(p, R_star))


@pytest.fixture(scope="session")
def eq():
    return make_eq(1e-5)


@pytest.fixture(scope="session")
def eq_large():
    return make_eq(1e-4)


def log_uniform(lo, hi):
    return st.floats(math.log(lo), math.log(hi)).map(math.exp)


@st.composite
def physical_params(draw):
    c_v = draw(st.floats(300.0, 3000.0))
    gamma = draw(st.floats(1.05, 1.67))
    return PhysicalParams.ideal_gas(
        kappa=draw(log_uniform(1e-3, 1.0)), R_g=(gamma - 1.0) * c_v, c_v=c_v,
        T_inf=draw(st.floats(200.0, 400.0)), p_inf_star=draw(log_uniform(1e4, 1e6)),
        sigma=draw(st.floats(0.0, 0.1)), mu_l=draw(st.floats(0.0, 1e-2)),
        rho_l=draw(st.floats(500.0, 2000.0)))


@st.composite
def equilibria(draw, r_lo=1e-6, r_hi=1e-3):
    p = draw(physical_params())
    return solve_equilibrium(p, mass_for_radius(p, draw(log_uniform(r_lo, r_hi))))


def random_params(rng):
    c_v = rng.uniform(300.0, 3000.0)
    gamma = rng.uniform(1.05, 1.67)
    return PhysicalParams.ideal_gas(
        kappa=math.exp(rng.uniform(math.log(1e-3), 0.0)), R_g=(gamma - 1.0) * c_v, c_v=c_v,
        T_inf=rng.uniform(200.0, 400.0), p_inf_star=math.exp(rng.uniform(math.log(1e4), math.log(1e6))),
        sigma=rng.uniform(0.0, 0.1), mu_l=rng.uniform(0.0, 1e-2), rho_l=rng.uniform(500.0, 2000.0))


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
