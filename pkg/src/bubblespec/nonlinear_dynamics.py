"""Full nonlinear Galerkin system with a time-periodic far-field pressure.

In the scaled radius y = r/R(t), the gas density is rho* + u(y, t) + z(t)
with u = sum_j c_j phi_j vanishing on the wall. The boundary density z is
fixed by the gas mass, which makes mass conservation exact:

    z = rho* R*^3 / R^3 - rho* - a sum_j Gamma_j c_j.

Projecting the density equation on phi_k gives

    c_k' = -kappa_bar lambda_k c_k - (Gamma_k - <zeta, phi_k>) z' + <F0, phi_k>

with zeta = (u + y u_y / 3) / (gamma (rho* + z)) and

    F0 = kappa_bar [rho* R*^2 / (R^2 rho) - 1] Lap u
         - kappa_bar rho* R*^2 |u_y|^2 / (R^2 rho^2) + (R'/R) y u_y.

Since z' contains sum Gamma_j c_j', the mode rows are implicit; the left
matrix is I - a v Gamma^T with v = Gamma - <zeta, phi>, inverted in closed
form. The radius obeys the interface stress balance

    rho_l (R R'' + 3/2 R'^2) = R_g T (rho* + z) - p_inf(t) - 2 sigma/R - 4 mu R'/R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from ._kernels import nonlinear_projections
from .integrator import LawsonDP5
from .linear_operator import build_operator, coupling_factor
from .params import Equilibrium, mode_arrays
from .spectral_basis import ModeTable, mode_table, radial_integral
from .state import GalerkinState, scaled_norm, state_scales


class RegimeExit(RuntimeError):
    """The state left the small-data regime (contraction or density guard)."""


class CollapseError(RegimeExit):
    """The bubble radius reached zero."""


CONTRACTION_LIMIT = 0.5


@dataclass(frozen=True)
class ForcingSpec:
    """p_inf(t) = p_inf* + psi(t), psi = amplitude * shape(omega t)."""
    omega: float
    amplitude: float
    waveform: str = "cos"

    _SHAPES = {"cos": math.cos, "sin": math.sin}

    def __post_init__(self) -> None:
        if not (self.omega > 0.0 and math.isfinite(self.omega)):
            raise ValueError("omega must be positive")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.waveform not in self._SHAPES:
            raise ValueError(f"waveform must be one of {sorted(self._SHAPES)}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def psi(self, t: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        return self.amplitude * self._SHAPES[self.waveform](self.omega * t)


def unforced(omega: float = 1.0) -> ForcingSpec:
    return ForcingSpec(omega=omega, amplitude=0.0)


@dataclass(frozen=True)
class NonlinearTrace:
    times: np.ndarray
    states: list[GalerkinState]
    z_values: np.ndarray
    masses: np.ndarray
    min_densities: np.ndarray
    norms: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    def vectors(self) -> np.ndarray:
        return np.array([s.to_vector() for s in self.states])


def z_from_state(w: GalerkinState, eq: Equilibrium) -> float:
    """Boundary density perturbation consistent with the gas mass."""
    R = eq.R_star + w.R_pert
    if R <= 0.0:
        raise CollapseError("bubble radius is not positive")
    _, gam = mode_arrays(eq, w.N)
    return eq.rho_star * math.expm1(-3.0 * math.log1p(w.R_pert / eq.R_star)) \
        - eq.a_coupling * float(gam @ w.coeffs)


def reconstruct_physical(w: GalerkinState, eq: Equilibrium,
                         table: ModeTable | None = None) -> tuple[np.ndarray, np.ndarray, float, float]:
    """(nodes, density profile, R, R_dot) on the quadrature nodes plus y = 1.

    The last entry of the profile is the wall value rho* + z.
    """
    table = table if table is not None else mode_table(w.N)
    z = z_from_state(w, eq)
    y = np.append(table.rule.nodes, 1.0)
    u = np.append(table.phi @ w.coeffs, 0.0)
    rho = eq.rho_star + u + z
    if np.any(rho <= 0.0):
        raise RegimeExit("gas density is not positive")
    return y, rho, eq.R_star + w.R_pert, w.R_dot


def physical_mass(w: GalerkinState, eq: Equilibrium, table: ModeTable | None = None) -> float:
    """4 pi R^3 int_0^1 rho y^2 dy by Gauss quadrature of the profile."""
    table = table if table is not None else mode_table(w.N)
    z = z_from_state(w, eq)
    rho = eq.rho_star + table.phi @ w.coeffs + z
    R = eq.R_star + w.R_pert
    return R ** 3 * radial_integral(rho, table.rule)


class NonlinearModel:
    """Precomputed tables and right-hand side for one (equilibrium, N)."""

    def __init__(self, eq: Equilibrium, N: int, n_nodes: int | None = None):
        self.eq = eq
        self.N = N
        self.table = mode_table(N, n_nodes)
        self.lam, self.gam = mode_arrays(eq, N)
        self._gam_norm = math.sqrt(float(self.gam @ self.gam))
        self.a = eq.a_coupling
        self.g_factor = coupling_factor(eq, N)
        self.L = build_operator(eq, N).matrix
        self.scales = state_scales(eq, N)
        self._phi = np.ascontiguousarray(self.table.phi)
        self._dphi = np.ascontiguousarray(self.table.dphi)
        self._lam = np.ascontiguousarray(self.lam)
        self._w = np.ascontiguousarray(self.table.rule.weights)
        self._y = np.ascontiguousarray(self.table.rule.nodes)

    # pieces shared by the direct solve and the N0/N1 split
    def _pieces(self, v: np.ndarray) -> dict:
        eq = self.eq
        p = eq.params
        Rs = eq.R_star
        Rp, Rd = float(v[0]), float(v[1])
        c = np.ascontiguousarray(v[2:])
        R = Rs + Rp
        if not R > 0.0:
            raise CollapseError("bubble radius is not positive")
        # (R*/R)^k - 1 without cancellation, so small states keep full relative accuracy
        log_ratio = -math.log1p(Rp / Rs)
        z = eq.rho_star * math.expm1(3.0 * log_ratio) - self.a * float(self.gam @ c)
        rho_wall = eq.rho_star + z
        if not rho_wall > 0.0:
            raise RegimeExit("wall density is not positive")
        f0, zeta, rho_min = nonlinear_projections(
            c, self._phi, self._dphi, self._lam, self._w, self._y,
            eq.kappa_bar, eq.rho_star, math.expm1(2.0 * log_ratio), z, Rd / R,
            1.0 / (p.gamma * rho_wall))
        if not rho_min > 0.0:
            raise RegimeExit("gas density is not positive")
        src = 3.0 * eq.rho_star * Rs ** 3 * Rd / R ** 4
        r_modes = -eq.kappa_bar * self.lam * c + np.asarray(f0) + (self.gam - np.asarray(zeta)) * src
        # R_g T rho* - p_inf* - 2 sigma/R* vanishes at equilibrium; it is
        # dropped so that w = 0 is an exact fixed point in floating point
        stress = (p.R_g * p.T_inf * z + 2.0 * p.sigma * Rp / (R * Rs)
                  - 4.0 * p.mu_l * Rd / R - 1.5 * p.rho_l * Rd * Rd)
        return dict(R=R, z=z, zeta=np.asarray(zeta), r_modes=r_modes, stress=stress,
                    rho_min=rho_min)

    def contraction_norm(self, v: np.ndarray, pieces: dict | None = None) -> float:
        """Spectral norm of N1(w), computed from its block structure."""
        pc = pieces if pieces is not None else self._pieces(v)
        zeta = pc["zeta"]
        y = zeta + self.g_factor * self.a * self.gam * float(self.gam @ zeta)
        block = self.a * math.sqrt(float(y @ y)) * self._gam_norm
        return max(abs(float(v[0])) / self.eq.R_star, block)

    def rhs(self, t: float, v: np.ndarray, psi: float = 0.0, guard: bool = True) -> np.ndarray:
        """w' for the state vector ``v`` and far-field excess pressure ``psi``."""
        pc = self._pieces(v)
        if guard and self.contraction_norm(v, pc) >= CONTRACTION_LIMIT:
            raise RegimeExit("||N1(w)|| reached the contraction limit")
        p = self.eq.params
        out = np.empty_like(v, dtype=float)
        out[0] = v[1]
        out[1] = (pc["stress"] - psi) / (p.rho_l * pc["R"])
        vv = self.gam - pc["zeta"]
        r = pc["r_modes"]
        denom = 1.0 - self.a * float(self.gam @ vv)
        out[2:] = r + self.a * vv * float(self.gam @ r) / denom
        return out

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(N1(w), N0(w)) with w' = L w + N1 w' + N0 + f."""
        pc = self._pieces(v)
        eq = self.eq
        p = eq.params
        n = self.N + 2
        # A(w) = A0 + A1(w); rows: R' = R_dot, (R/R*) R'' = ..., (I - a v G^T) c' = ...
        A1 = np.zeros((n, n))
        A1[1, 1] = float(v[0]) / eq.R_star
        A1[2:, 2:] = self.a * np.outer(pc["zeta"], self.gam)
        A0inv = np.eye(n)
        A0inv[2:, 2:] += self.g_factor * self.a * np.outer(self.gam, self.gam)
        raw = np.empty(n)
        raw[0] = v[1]
        raw[1] = pc["stress"] / (p.rho_l * eq.R_star)
        raw[2:] = pc["r_modes"]
        N1 = -A0inv @ A1
        N0 = A0inv @ raw - self.L @ v
        return N1, N0

    def forcing_vector(self, psi: float) -> np.ndarray:
        f = np.zeros(self.N + 2)
        f[1] = -psi / (self.eq.params.rho_l * self.eq.R_star)
        return f


@lru_cache(maxsize=16)
def get_model(eq: Equilibrium, N: int) -> NonlinearModel:
    return NonlinearModel(eq, N)


def assemble_rhs(t: float, w: GalerkinState, forcing: ForcingSpec, eq: Equilibrium) -> np.ndarray:
    """w' = (I - N1(w))^{-1} [L w + N0(w) + f(t)].

    Evaluated through the equivalent closed-form solve of the implicit
    mode rows; :meth:`NonlinearModel.split` exposes N1 and N0 themselves.
    """
    model = get_model(eq, w.N)
    return model.rhs(t, w.to_vector(), forcing.psi(t))


def nonlinear_terms(w: GalerkinState, eq: Equilibrium) -> tuple[np.ndarray, np.ndarray]:
    return get_model(eq, w.N).split(w.to_vector())


def forcing_term(t: float, forcing: ForcingSpec, eq: Equilibrium, N: int) -> np.ndarray:
    """f(t, 0, A): the pressure forcing enters the radial acceleration only."""
    return get_model(eq, N).forcing_vector(forcing.psi(t))


def make_integrator(model: NonlinearModel, forcing: ForcingSpec, tol: float,
                    guard: bool = True) -> LawsonDP5:
    L = model.L

    def g(t: float, v: np.ndarray) -> np.ndarray:
        return model.rhs(t, v, forcing.psi(t), guard=guard) - L @ v

    return LawsonDP5(L, g, model.scales, rtol=tol)


def _initial_step(model: NonlinearModel, forcing: ForcingSpec, T: float) -> float:
    h = 0.02 / math.sqrt(model.eq.b)
    if forcing.amplitude != 0.0:
        h = min(h, 0.02 * forcing.period)
    return min(h, T)


def flow(model: NonlinearModel, v0: np.ndarray, forcing: ForcingSpec, t0: float,
         t_out: np.ndarray, tol: float) -> np.ndarray:
    """States at ``t_out`` (sorted, >= t0) starting from ``v0`` at ``t0``."""
    t_out = np.asarray(t_out, dtype=float)
    integ = make_integrator(model, forcing, tol)
    T = float(t_out[-1]) - t0
    if T <= 0.0:
        return np.repeat(np.asarray(v0, float)[None, :], t_out.size, axis=0)
    return integ.solve((t0, float(t_out[-1])), v0, t_out, h0=_initial_step(model, forcing, T))


def evolve_nonlinear(w0: GalerkinState, forcing: ForcingSpec, T: float, tol: float,
                     eq: Equilibrium, n_out: int = 201,
                     t_out: np.ndarray | None = None) -> NonlinearTrace:
    """Integrate the nonlinear system over [0, T] with local error control ``tol``."""
    if not T > 0.0:
        raise ValueError("duration must be positive")
    model = get_model(eq, w0.N)
    times = np.linspace(0.0, T, n_out) if t_out is None else np.asarray(t_out, float)
    vecs = flow(model, w0.to_vector(), forcing, 0.0, times, tol)
    states = [GalerkinState.from_vector(v) for v in vecs]
    zs, masses, mins, norms = [], [], [], []
    for s in states:
        _, rho, _, _ = reconstruct_physical(s, eq, model.table)
        zs.append(z_from_state(s, eq))
        masses.append(physical_mass(s, eq, model.table))
        mins.append(float(rho.min()))
        norms.append(scaled_norm(s.to_vector(), model.scales))
    return NonlinearTrace(times=times, states=states, z_values=np.array(zs),
                          masses=np.array(masses), min_densities=np.array(mins),
                          norms=np.array(norms))
