"""Linear evolution, the linearized energy and the mass constraint."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .linear_operator import TruncatedOperator, reconstruct_z_linear
from .params import Equilibrium, gamma_coefficient, mode_arrays
from .spectral_basis import default_rule, mode_table, radial_integral
from .state import GalerkinState

__all__ = ["GalerkinState", "Trace", "evolve_linear", "project_mass_constraint",
           "energy_total", "energy_constrained_form", "dissipation_rate",
           "coercivity_slack", "fit_decay_rate", "state_z", "l2_norm",
           "mass_residual"]

CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class Trace:
    times: np.ndarray
    states: list[GalerkinState]
    energies: np.ndarray
    norms: np.ndarray
    mass_residuals: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.times)
        if not (len(self.states) == n == len(self.energies) == len(self.norms)):
            raise ValueError("trace columns must have equal length")
        if n > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    def vectors(self) -> np.ndarray:
        return np.array([s.to_vector() for s in self.states])


def state_z(w: GalerkinState, eq: Equilibrium) -> float:
    """Boundary density: the stored value or the constraint reconstruction."""
    return w.z if w.z is not None else reconstruct_z_linear(w, eq)


def _integral_u(w: GalerkinState, eq: Equilibrium) -> float:
    _, gam = mode_arrays(eq, w.N)
    g = eq.params.gamma
    return g / (g - 1.0) * float(gam @ w.coeffs)


def mass_residual(w: GalerkinState, eq: Equilibrium, quadrature: bool = True) -> float:
    """int_{B_1} rho_pert dx + 4 pi (rho*/R*) R_pert.

    With ``quadrature=True`` the density integral is evaluated on the
    Gauss rule from the synthesized profile, independently of the Gamma_j
    closed form.
    """
    z = state_z(w, eq)
    if quadrature:
        table = mode_table(w.N)
        u = table.phi @ w.coeffs
        integral = radial_integral(u + z, table.rule)
    else:
        integral = _integral_u(w, eq) + 4.0 * math.pi / 3.0 * z
    return integral + 4.0 * math.pi * eq.rho_star / eq.R_star * w.R_pert


def project_mass_constraint(w: GalerkinState, eq: Equilibrium) -> GalerkinState:
    """Move R_pert so the linear mass constraint holds exactly.

    R_dot and the mode coefficients are untouched. A state without an
    explicit boundary density already satisfies the constraint through its
    reconstruction and is returned as is.
    """
    if w.z is None:
        return w
    target = -eq.R_star / (4.0 * math.pi * eq.rho_star) \
        * (_integral_u(w, eq) + 4.0 * math.pi / 3.0 * w.z)
    if target == w.R_pert:
        return w
    return replace(w, R_pert=target)


def _require_constrained(w: GalerkinState, eq: Equilibrium) -> None:
    if w.z is None:
        return
    res = mass_residual(w, eq, quadrature=False)
    if abs(res) > CONSTRAINT_TOL * eq.rho_star:
        raise ValueError(f"state violates the linear mass constraint (residual {res:.3e})")


def energy_total(w: GalerkinState, eq: Equilibrium) -> float:
    """Linearized total energy in the (u, z, R_pert, R_dot) form."""
    _require_constrained(w, eq)
    p = eq.params
    R = eq.R_star
    z = state_z(w, eq)
    RgT = p.R_g * p.T_inf
    u2 = float(w.coeffs @ w.coeffs)
    return (-4.0 * math.pi * p.sigma * w.R_pert ** 2
            - 4.0 * math.pi * RgT * R * R * w.R_pert * z
            - 2.0 * math.pi * RgT * R ** 3 / (3.0 * eq.rho_star) * z * z
            + p.c_v * p.gamma * p.T_inf * R ** 3 / (2.0 * eq.rho_star) * u2
            + 2.0 * math.pi * p.rho_l * R ** 3 * w.R_dot ** 2)


def energy_constrained_form(w: GalerkinState, eq: Equilibrium) -> float:
    """The same energy with z eliminated through the mass constraint."""
    _require_constrained(w, eq)
    p = eq.params
    R = eq.R_star
    iu = _integral_u(w, eq)
    u2 = float(w.coeffs @ w.coeffs)
    return (2.0 * math.pi * (4.0 * p.sigma + 3.0 * p.p_inf_star * R) * w.R_pert ** 2
            - R * R / (8.0 * math.pi * eq.rho_star ** 2)
            * (6.0 * p.sigma + 3.0 * p.p_inf_star * R) * iu * iu
            + p.c_v * p.gamma * p.T_inf * R ** 3 / (2.0 * eq.rho_star) * u2
            + 2.0 * math.pi * p.rho_l * R ** 3 * w.R_dot ** 2)


def dissipation_rate(w: GalerkinState, eq: Equilibrium) -> float:
    """Right side of the energy identity.

    The gradient energy uses int grad(phi_j) . grad(phi_k) = lambda_j delta_jk.
    """
    _require_constrained(w, eq)
    p = eq.params
    lam, _ = mode_arrays(eq, w.N)
    grad2 = float(np.sum(lam * w.coeffs ** 2))
    return (-p.kappa * p.T_inf / eq.rho_star ** 2 * eq.R_star * grad2
            - 16.0 * math.pi * p.mu_l * eq.R_star * w.R_dot ** 2)


def coercivity_slack(w: GalerkinState, eq: Equilibrium) -> tuple[float, float]:
    """(energy - lower bound, scale of the terms involved)."""
    p = eq.params
    R = eq.R_star
    u2 = float(w.coeffs @ w.coeffs)
    t1 = 2.0 * math.pi * (4.0 * p.sigma + 3.0 * p.p_inf_star * R) * w.R_pert ** 2
    t2 = p.c_v * p.T_inf * R ** 3 / (2.0 * eq.rho_star) * u2
    t3 = 2.0 * math.pi * p.rho_l * R ** 3 * w.R_dot ** 2
    e = energy_total(w, eq)
    scale = abs(e) + t1 + t2 + t3
    return e - (t1 + t2 + t3), scale


def l2_norm(w: GalerkinState, eq: Equilibrium) -> float:
    """||rho_pert||_{L^2(B_1)} + |R_pert| + |R_dot|."""
    z = state_z(w, eq)
    iu = _integral_u(w, eq)
    sq = float(w.coeffs @ w.coeffs) + 2.0 * z * iu + 4.0 * math.pi / 3.0 * z * z
    return math.sqrt(max(sq, 0.0)) + abs(w.R_pert) + abs(w.R_dot)


def _propagators(L: np.ndarray, steps: np.ndarray) -> list[np.ndarray]:
    cache: dict[float, np.ndarray] = {}
    out = []
    for h in steps:
        key = float(h)
        if key not in cache:
            cache[key] = expm(L * key)
        out.append(cache[key])
    return out


def evolve_linear(op: TruncatedOperator, w0: GalerkinState,
                  t_grid: Sequence[float]) -> Trace:
    """Exact flow of the truncated system sampled on ``t_grid``.

    Increments between samples are propagated with the Pade
    scaling-and-squaring matrix exponential; equal increments share one
    exponential.
    """
    if w0.N != op.N:
        raise ValueError(f"state has N={w0.N} but operator has N={op.N}")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or t[0] != 0.0:
        raise ValueError("t_grid must be a 1-d sequence starting at 0")
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    w0 = project_mass_constraint(w0, op.eq)
    v = w0.to_vector()
    vecs = [v]
    for P in _propagators(op.matrix, np.diff(t)):
        v = P @ v
        vecs.append(v)
    states = [GalerkinState.from_vector(x) for x in vecs]
    eq = op.eq
    return Trace(times=t, states=states,
                 energies=np.array([energy_total(s, eq) for s in states]),
                 norms=np.array([l2_norm(s, eq) for s in states]),
                 mass_residuals=np.array([mass_residual(s, eq) for s in states]))


def fit_decay_rate(trace: Trace, window: tuple[float, float]) -> tuple[float, float]:
    """Least-squares decay rate of log(norm) on ``window``.

    Returns (rate, rms residual of the log fit).
    """
    t0, t1 = window
    mask = (trace.times >= t0) & (trace.times <= t1)
    if mask.sum() < 2:
        raise ValueError("window holds fewer than two samples")
    norms = trace.norms[mask]
    if np.any(norms <= 0.0):
        raise ValueError("norm is not positive on the window")
    t = trace.times[mask]
    y = np.log(norms)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(-coef[0]), float(np.sqrt(np.mean(resid ** 2)))
