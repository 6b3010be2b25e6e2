"""Regime formulas for thermal damping and sweeps over the thermal diffusivity.

Compares the rigorous decay-rate bound with the truncated-spectrum
abscissa, the isothermal and adiabatic limit bounds, and Prosperetti's
approximate rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linear_operator import build_operator
from .params import Equilibrium, PhysicalParams, solve_equilibrium
from .parallel import pmap
from .spectrum import rate_lower_bound

__all__ = ["RegimeReport", "regime_bounds", "prosperetti_rates", "sweep_chi",
           "natural_frequency", "BRANCH_LABELS", "REPORT_COLUMNS"]

BRANCH_LABELS = {1: "adiabatic", 2: "inertial", 3: "isothermal"}
REPORT_COLUMNS = ("chi", "beta_bound", "beta_iso", "beta_adi", "beta_P91_iso",
                  "beta_P91_adi_per", "abscissa", "binding_branch")


def regime_bounds(eq: Equilibrium) -> tuple[float, float]:
    """(beta_isothermal, beta_adiabatic), both with the liquid viscosity set to 0."""
    p = eq.params
    th = eq.theta_gamma
    R = eq.R_star
    iso = 4.0 * th * eq.p_star / (90.0 * p.rho_l * eq.chi)
    ratio = p.p_inf_star * R / (2.0 * p.p_inf_star * R + 6.0 * p.sigma)
    adi = (1.0 - math.sqrt(th / (ratio + th))) * math.pi ** 2 * eq.chi / (R * R)
    return iso, adi


def natural_frequency(eq: Equilibrium) -> float:
    """Undamped radial frequency sqrt(b) of the linearized radius equation."""
    return math.sqrt(eq.b)


def prosperetti_rates(eq: Equilibrium, omega: float) -> tuple[float, float]:
    """(isothermal rate, periodic adiabatic rate) from Prosperetti's approximations."""
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    p = eq.params
    g = p.gamma
    R = eq.R_star
    iso = eq.theta_gamma * eq.p_star / (10.0 * p.rho_l * eq.chi)
    adi = 9.0 * g * (g - 1.0) * eq.p_star * math.sqrt(eq.chi) \
        / (2.0 ** 1.5 * p.rho_l * omega ** 1.5 * R ** 3)
    return iso, adi


@dataclass(frozen=True)
class RegimeReport:
    chi_values: np.ndarray
    beta_bound: np.ndarray
    beta_isothermal: np.ndarray
    beta_adiabatic: np.ndarray
    beta_P91_isothermal: np.ndarray
    beta_P91_adiabatic_per: np.ndarray
    spectral_abscissa: np.ndarray
    binding_branch: np.ndarray
    regime_labels: tuple
    omega: float
    N: int

    def dominance(self) -> np.ndarray:
        """|abscissa| >= beta_bound at each point."""
        return np.abs(self.spectral_abscissa) >= self.beta_bound

    def crossovers(self) -> list[int]:
        """Indices i where the binding branch changes between points i and i + 1."""
        b = self.binding_branch
        return [i for i in range(len(b) - 1) if b[i] != b[i + 1]]

    def rows(self) -> list[tuple]:
        return [(self.chi_values[i], self.beta_bound[i], self.beta_isothermal[i],
                 self.beta_adiabatic[i], self.beta_P91_isothermal[i],
                 self.beta_P91_adiabatic_per[i], self.spectral_abscissa[i],
                 int(self.binding_branch[i])) for i in range(len(self.chi_values))]

    def summary(self) -> str:
        ok = self.dominance()
        lines = [f"points: {len(self.chi_values)}  N: {self.N}  omega: {self.omega:.17e}",
                 f"bound dominance: {int(ok.sum())}/{ok.size}",
                 f"binding branch changes after points: {self.crossovers()}"]
        for label in ("adiabatic", "inertial", "isothermal"):
            n = sum(1 for x in self.regime_labels if x == label)
            if n:
                lines.append(f"{label}: {n}")
        return "\n".join(lines)


def _point(args) -> tuple:
    params, M, chi, omega, N = args
    base = solve_equilibrium(params, M)
    # the equilibrium does not depend on kappa; chi = kappa / (c_p rho*)
    kappa = chi * params.c_p * base.rho_star
    eq = solve_equilibrium(params.replace(kappa=kappa), M)
    bound = rate_lower_bound(eq)
    iso, adi = regime_bounds(eq)
    om = omega if omega is not None else natural_frequency(eq)
    p_iso, p_adi = prosperetti_rates(eq, om)
    absc = build_operator(eq, N).abscissa().real
    return (eq.chi, bound.beta, iso, adi, p_iso, p_adi, absc, bound.binding_branch, om)


def sweep_chi(params: PhysicalParams, M: float, chi_grid: Sequence[float],
              omega: float | None = None, N: int = 128) -> RegimeReport:
    """Evaluate every rate at each thermal diffusivity in ``chi_grid``.

    chi is varied by scaling kappa with all other parameters fixed. The
    forcing frequency for the periodic adiabatic rate defaults to the
    natural frequency of the equilibrium.
    """
    chi = np.asarray(chi_grid, dtype=float)
    if chi.ndim != 1 or chi.size < 1 or np.any(~(chi > 0.0)) or not np.all(np.isfinite(chi)):
        raise ValueError("chi_grid must be a nonempty sequence of positive numbers")
    rows = pmap(_point, [(params, M, float(c), omega, N) for c in chi])
    cols = list(zip(*rows))
    branch = np.array(cols[7], dtype=int)
    return RegimeReport(chi_values=np.array(cols[0]), beta_bound=np.array(cols[1]),
                        beta_isothermal=np.array(cols[2]), beta_adiabatic=np.array(cols[3]),
                        beta_P91_isothermal=np.array(cols[4]),
                        beta_P91_adiabatic_per=np.array(cols[5]),
                        spectral_abscissa=np.array(cols[6]), binding_branch=branch,
                        regime_labels=tuple(BRANCH_LABELS[int(b)] for b in branch),
                        omega=float(cols[8][0]) if omega is None else float(omega), N=N)
