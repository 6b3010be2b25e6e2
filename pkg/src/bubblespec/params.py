"""Physical parameters, the equilibrium bubble and derived constants.

All quantities are SI. An equilibrium is fixed by the gas mass ``M``: the
radius solves the monotone cubic

    p_inf * R^3 + 2 sigma R^2 = 3 M R_g T_inf / (4 pi)

and the density follows from the ideal gas law at the interface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """Raised for physically invalid or inconsistent parameters."""


class EquilibriumError(RuntimeError):
    """Raised when the equilibrium root solve fails to converge."""


_GAMMA_RTOL = 1e-12


@dataclass(frozen=True)
class PhysicalParams:
    kappa: float
    gamma: float
    c_v: float
    R_g: float
    T_inf: float
    p_inf_star: float
    sigma: float
    mu_l: float
    rho_l: float

    def __post_init__(self) -> None:
        for name in ("kappa", "gamma", "c_v", "R_g", "T_inf",
                     "p_inf_star", "sigma", "mu_l", "rho_l"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) \
                    or isinstance(value, bool):
                raise ParameterError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("kappa", "c_v", "R_g", "T_inf", "p_inf_star", "rho_l"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be strictly positive")
        if self.gamma <= 1.0:
            raise ParameterError("gamma must exceed 1")
        if self.sigma < 0.0:
            raise ParameterError("sigma must be nonnegative")
        if self.mu_l < 0.0:
            raise ParameterError("mu_l must be nonnegative")
        expected = 1.0 + self.R_g / self.c_v
        if abs(self.gamma - expected) > _GAMMA_RTOL * expected:
            raise ParameterError(
                f"gamma={self.gamma!r} inconsistent with 1 + R_g/c_v = {expected!r}")

    @property
    def c_p(self) -> float:
        return self.gamma * self.c_v

    @property
    def theta(self) -> float:
        """1 - 1/gamma."""
        return 1.0 - 1.0 / self.gamma

    def replace(self, **changes: float) -> "PhysicalParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return PhysicalParams(**values)

    @classmethod
    def ideal_gas(cls, *, kappa: float, R_g: float, c_v: float, T_inf: float,
                  p_inf_star: float, sigma: float, mu_l: float,
                  rho_l: float) -> "PhysicalParams":
        """Build parameters with gamma derived from R_g and c_v."""
        return cls(kappa=kappa, gamma=1.0 + R_g / c_v, c_v=c_v, R_g=R_g,
                   T_inf=T_inf, p_inf_star=p_inf_star, sigma=sigma,
                   mu_l=mu_l, rho_l=rho_l)


@dataclass(frozen=True)
class Equilibrium:
    params: PhysicalParams = field(repr=False)
    M: float
    rho_star: float
    R_star: float
    p_star: float
    kappa_bar: float
    chi: float
    b: float
    d: float
    theta_gamma: float

    @property
    def pole_scale(self) -> float:
        """pi^2 * kappa_bar, the magnitude of the first pole of Q."""
        return math.pi ** 2 * self.kappa_bar

    @property
    def a_coupling(self) -> float:
        """3 gamma / (4 pi (gamma - 1)), maps mode sums to boundary density."""
        g = self.params.gamma
        return 3.0 * g / (4.0 * math.pi * (g - 1.0))


def air_water(kappa: float = 0.026) -> PhysicalParams:
    """Air bubble in water at room temperature; a convenient reference set."""
    R_g = 287.0
    gamma = 1.4
    return PhysicalParams(kappa=kappa, gamma=gamma, c_v=R_g / (gamma - 1.0),
                          R_g=R_g, T_inf=293.15, p_inf_star=101325.0,
                          sigma=0.0725, mu_l=1.0e-3, rho_l=998.0)


def mass_for_radius(params: PhysicalParams, R_star: float) -> float:
    """Gas mass whose equilibrium radius is ``R_star``."""
    if R_star <= 0.0:
        raise ParameterError("R_star must be positive")
    return 4.0 * math.pi * (params.p_inf_star * R_star ** 3
                            + 2.0 * params.sigma * R_star ** 2) \
        / (3.0 * params.R_g * params.T_inf)


def _solve_radius(params: PhysicalParams, M: float) -> float:
    p = params.p_inf_star
    s = params.sigma
    rhs = 3.0 * M * params.R_g * params.T_inf / (4.0 * math.pi)
    r_free = (rhs / p) ** (1.0 / 3.0)

    def f(r: float) -> float:
        return (p * r + 2.0 * s) * r * r - rhs

    lo, hi = 0.0, 2.0 * r_free
    if f(hi) <= 0.0:
        raise EquilibriumError("radius bracket does not contain the root")
    # surface tension only shrinks the radius, so r_free is a good start
    r = r_free
    for _ in range(200):
        fr = f(r)
        if fr == 0.0:
            return r
        if fr > 0.0:
            hi = r
        else:
            lo = r
        dfr = r * (3.0 * p * r + 4.0 * s)
        step_ok = dfr > 0.0
        if step_ok:
            r_new = r - fr / dfr
            step_ok = lo < r_new < hi
        if not step_ok:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 4e-16 * r_new:
            return r_new
        r = r_new
    raise EquilibriumError("radius solve did not converge")


def solve_equilibrium(params: PhysicalParams, M: float) -> Equilibrium:
    """Equilibrium bubble holding gas mass ``M`` and its derived constants."""
    if not isinstance(params, PhysicalParams):
        raise ParameterError("params must be a PhysicalParams instance")
    M = float(M)
    if not (math.isfinite(M) and M > 0.0):
        raise ParameterError("M must be a positive finite mass")
    R = _solve_radius(params, M)
    RgT = params.R_g * params.T_inf
    rho = (params.p_inf_star + 2.0 * params.sigma / R) / RgT
    p_star = RgT * rho
    chi = params.kappa / (params.c_p * rho)
    g = params.gamma
    b = 3.0 * params.p_inf_star / (params.rho_l * R * R) \
        + 4.0 * params.sigma / (params.rho_l * R ** 3)
    d = 3.0 * g * RgT / (4.0 * math.pi * (g - 1.0) * params.rho_l * R)
    return Equilibrium(params=params, M=M, rho_star=rho, R_star=R,
                       p_star=p_star, kappa_bar=chi / (R * R), chi=chi, b=b,
                       d=d, theta_gamma=1.0 - 1.0 / g)


def gamma_coefficient(gamma: float) -> float:
    """Magnitude prefactor of the boundary coupling: Gamma_j = C (-1)^(j-1) / j."""
    return 2.0 * math.sqrt(2.0) * (gamma - 1.0) / (math.sqrt(math.pi) * gamma)


def gamma_sum_limit(gamma: float) -> float:
    """Sum of Gamma_j^2 over all j >= 1."""
    return 4.0 * (gamma - 1.0) ** 2 * math.pi / (3.0 * gamma ** 2)


def mode_constants(eq: Equilibrium, j: int) -> tuple[float, float, float]:
    """Return (lambda_j, Gamma_j, e_j) for Dirichlet mode ``j``.

    ``e_j`` is the coefficient of Gamma_j Gamma_k in the column ``k = j`` of
    the thermal block of the generator when the boundary-density coupling is
    inverted in closed form. The finite truncation uses the exact rank-one
    inverse instead; see :func:`bubblespec.linear_operator.coupling_factor`.
    """
    if isinstance(j, bool) or int(j) != j:
        raise ParameterError("mode index must be an integer")
    j = int(j)
    if j < 1:
        raise ParameterError("mode index must be >= 1")
    g = eq.params.gamma
    lam = (j * math.pi) ** 2
    gam = gamma_coefficient(g) * (1.0 if j % 2 == 1 else -1.0) / j
    e = eq.kappa_bar * lam * 3.0 * g * g / (4.0 * math.pi * (g - 1.0))
    return lam, gam, e


def mode_arrays(eq: Equilibrium, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (lambda_j, Gamma_j) for j = 1..N."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    j = np.arange(1, N + 1, dtype=float)
    lam = (j * math.pi) ** 2
    sign = np.where(np.arange(1, N + 1) % 2 == 1, 1.0, -1.0)
    gam = gamma_coefficient(eq.params.gamma) * sign / j
    return lam, gam
