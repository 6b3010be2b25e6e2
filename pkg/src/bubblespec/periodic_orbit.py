"""Time-periodic pulsations as fixed points of the period map.

The fixed point solves w0 = (I - E)^{-1} int_0^T e^{L (T - s)} g(s) ds with
E = e^{L T} and g the nonlinear and forcing part of the right side along
the trajectory from w0. The integral is evaluated by exponential Gauss
quadrature: on each panel g is replaced by its degree-7 interpolant on the
Gauss nodes and integrated exactly against the exponential, mode by mode,
in the eigenbasis of L. Variation of constants gives the same integral as
P(w0) - E w0, which is kept as an independent check on the quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .nonlinear_dynamics import (ForcingSpec, NonlinearModel, NonlinearTrace,
                                 RegimeExit, evolve_nonlinear, flow, get_model)
from .params import Equilibrium
from .parallel import pmap
from .state import GalerkinState, scaled_norm

__all__ = ["PeriodicSolution", "PeriodicOrbitError", "poincare_map", "find_periodic",
           "floquet_multipliers", "convergence_to_orbit", "MAP_TOL"]

MAP_TOL = 1e-12
ORBIT_SAMPLES = 256
PANELS = 64
PANEL_NODES = 8
FD_STEP = 1e-7


class PeriodicOrbitError(RuntimeError):
    """Neither the Picard iteration nor the Newton fallback converged."""


@dataclass(frozen=True)
class PeriodicSolution:
    w0: GalerkinState
    period: float
    orbit: NonlinearTrace
    residual: float
    floquet: tuple = ()
    contraction_rate: float = float("nan")
    forcing: ForcingSpec | None = None
    method: str = "picard"
    iterations: int = 0
    quadrature_defect: float = float("nan")
    history: tuple = field(default=())


def _amplitude_scale(forcing: ForcingSpec, eq: Equilibrium) -> float:
    """Forcing amplitude in the dimensionless units of the scaled norm."""
    return abs(forcing.amplitude) / eq.p_star


def _period_flow(model: NonlinearModel, v0: np.ndarray, forcing: ForcingSpec,
                 t_out: np.ndarray, tol: float) -> np.ndarray:
    return flow(model, v0, forcing, 0.0, t_out, tol)


def poincare_map(w0: GalerkinState, forcing: ForcingSpec, eq: Equilibrium,
                 tol: float = MAP_TOL) -> GalerkinState:
    """w(T; w0) with T = 2 pi / omega."""
    model = get_model(eq, w0.N)
    v = _period_flow(model, w0.to_vector(), forcing, np.array([forcing.period]), tol)[-1]
    return GalerkinState.from_vector(v)


class _ExpQuadrature:
    """Exponential Gauss quadrature of int_0^T e^{L (T - s)} g(s) ds."""

    def __init__(self, model: NonlinearModel, T: float,
                 panels: int = PANELS, nodes: int = PANEL_NODES):
        s = model.scales
        Ls = model.L * s[None, :] / s[:, None]
        mu, V = np.linalg.eig(Ls)
        self.mu, self.V, self.Vinv, self.scales = mu, V, np.linalg.inv(V), s
        self.T = T
        x, _ = np.polynomial.legendre.leggauss(nodes)
        h = T / panels
        left = np.arange(panels) * h
        self.times = (left[:, None] + 0.5 * h * (1.0 + x[None, :])).reshape(-1)
        self.panels, self.nodes = panels, nodes
        # weight of node k on a panel, per mode: (h/2) int_{-1}^{1} e^{z (1 - x)} l_k(x) dx
        self.w = 0.5 * h * _exp_lagrange_weights(0.5 * h * mu, x)
        # e^{mu (T - b_p)} for the right end b_p of each panel
        self.decay = np.exp(np.outer(T - (left + h), mu))
        self.E = np.exp(mu * T)

    def to_eta(self, v: np.ndarray) -> np.ndarray:
        return (self.Vinv @ (v / self.scales).T).T

    def to_w(self, eta: np.ndarray) -> np.ndarray:
        return (self.V @ eta).real * self.scales

    def integral_eta(self, g_values: np.ndarray) -> np.ndarray:
        """Integral in eigen-coordinates from g sampled at ``self.times``."""
        ge = self.to_eta(g_values).reshape(self.panels, self.nodes, -1)
        per_panel = np.einsum("mk,pkm->pm", self.w, ge)
        return np.sum(self.decay * per_panel, axis=0)

    def integral(self, g_values: np.ndarray) -> np.ndarray:
        return self.to_w(self.integral_eta(g_values))

    def fixed_point_update(self, g_values: np.ndarray) -> np.ndarray:
        return self.to_w(self.integral_eta(g_values) / (1.0 - self.E))

    def propagate(self, v: np.ndarray) -> np.ndarray:
        """e^{L T} v."""
        return self.to_w(self.E * self.to_eta(v))


def _exp_lagrange_weights(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """int_{-1}^{1} e^{z (1 - x)} l_k(x) dx for each z and Lagrange basis l_k.

    In sigma = 1 - x the exponential is concentrated near sigma = 0 when
    Re z << 0, so sigma in [0, 2] is split geometrically toward zero and
    each piece gets a 16-point Gauss rule.
    """
    z = np.asarray(z, dtype=complex)
    edges = np.concatenate(([0.0], 2.0 * 2.0 ** -np.arange(48, -1, -1.0)))
    gx, gw = np.polynomial.legendre.leggauss(16)
    a, b = edges[:-1], edges[1:]
    sig = (0.5 * (b - a)[:, None] * (gx[None, :] + 1.0) + a[:, None]).reshape(-1)
    wts = (0.5 * (b - a)[:, None] * gw[None, :]).reshape(-1)
    xs = 1.0 - sig
    n = x.size
    lag = np.ones((n, xs.size))
    for k in range(n):
        for j in range(n):
            if j != k:
                lag[k] *= (xs - x[j]) / (x[k] - x[j])
    ez = np.exp(np.outer(z, sig))
    return (ez * wts[None, :]) @ lag.T


@lru_cache(maxsize=32)
def _quadrature(eq: Equilibrium, N: int, T: float) -> _ExpQuadrature:
    return _ExpQuadrature(get_model(eq, N), T)


def _g_values(model: NonlinearModel, forcing: ForcingSpec, times: np.ndarray,
              states: np.ndarray) -> np.ndarray:
    return np.array([model.rhs(t, v, forcing.psi(t)) - model.L @ v
                     for t, v in zip(times, states)])


def _picard_step(model: NonlinearModel, quad: _ExpQuadrature, forcing: ForcingSpec,
                 v0: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
    """(updated w0, P(w0), relative disagreement of the two integral routes)."""
    t_out = np.append(quad.times, quad.T)
    states = _period_flow(model, v0, forcing, t_out, tol)
    pv = states[-1]
    g = _g_values(model, forcing, quad.times, states[:-1])
    integral_quad = quad.integral(g)
    integral_flow = pv - quad.propagate(v0)
    s = model.scales
    size = max(scaled_norm(integral_flow, s), scaled_norm(integral_quad, s), 1e-300)
    defect = scaled_norm(integral_quad - integral_flow, s) / size
    return quad.fixed_point_update(g), pv, defect


def _fd_column(args) -> np.ndarray:
    eq, N, forcing, v0, base, j, delta, tol = args
    model = get_model(eq, N)
    v = v0.copy()
    v[j] += delta
    pv = _period_flow(model, v, forcing, np.array([forcing.period]), tol)[-1]
    return (pv - base) / delta


def _monodromy(eq: Equilibrium, N: int, forcing: ForcingSpec, v0: np.ndarray,
               base: np.ndarray, tol: float) -> np.ndarray:
    """Forward-difference Jacobian of the period map at v0, one flow per column."""
    model = get_model(eq, N)
    jobs = [(eq, N, forcing, v0, base, j, FD_STEP * model.scales[j], tol)
            for j in range(N + 2)]
    return np.column_stack(pmap(_fd_column, jobs))


def _newton(eq: Equilibrium, N: int, forcing: ForcingSpec, v0: np.ndarray,
            tol: float, target: float, max_iter: int = 12) -> tuple[np.ndarray, float, int]:
    model = get_model(eq, N)
    s = model.scales
    T = forcing.period
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        pv = _period_flow(model, v0, forcing, np.array([T]), tol)[-1]
        res = pv - v0
        if scaled_norm(res, s) <= target(v0):
            return v0, scaled_norm(res, s), n_iter
        J = _monodromy(eq, N, forcing, v0, pv, tol) - np.eye(N + 2)
        v0 = v0 - np.linalg.solve(J, res)
    pv = _period_flow(model, v0, forcing, np.array([T]), tol)[-1]
    return v0, scaled_norm(pv - v0, s), n_iter


def _orbit(eq: Equilibrium, w0: GalerkinState, forcing: ForcingSpec, tol: float) -> NonlinearTrace:
    return evolve_nonlinear(w0, forcing, forcing.period, tol, eq, n_out=ORBIT_SAMPLES + 1)


def find_periodic(forcing: ForcingSpec, eq: Equilibrium, tol: float = 1e-9, N: int = 32,
                  max_picard: int = 60, map_tol: float = MAP_TOL,
                  with_floquet: bool = True, method: str = "auto") -> PeriodicSolution:
    """Fixed point of the period map with residual below ``tol`` relative.

    The residual ||P(w0) - w0|| is measured in the scaled norm and must fall
    below tol * (||w0|| + |A| / p*). ``method`` is "auto" (Picard, then
    Newton if Picard stalls), "picard" or "newton".
    """
    if method not in ("auto", "picard", "newton"):
        raise ValueError("method must be auto, picard or newton")
    model = get_model(eq, N)
    s = model.scales
    amp = _amplitude_scale(forcing, eq)

    def target(v: np.ndarray) -> float:
        return tol * (scaled_norm(v, s) + amp)

    v0 = np.zeros(N + 2)
    history: list[float] = []
    defect = float("nan")
    used = "picard"
    n_iter = 0
    converged = False
    if forcing.amplitude == 0.0:
        residual = 0.0
        converged = True
    else:
        residual = float("inf")
    if not converged and method in ("auto", "picard"):
        quad = _quadrature(eq, N, forcing.period)
        stall = 0
        try:
            for n_iter in range(1, max_picard + 1):
                v_new, pv, defect = _picard_step(model, quad, forcing, v0, map_tol)
                residual = scaled_norm(pv - v0, s)
                history.append(residual)
                if residual <= target(v0):
                    converged = True
                    break
                if len(history) > 1 and residual > 0.9 * history[-2]:
                    stall += 1
                    if stall >= 3:
                        break
                else:
                    stall = 0
                v0 = v_new
        except RegimeExit:
            converged = False
    if not converged and method in ("auto", "newton"):
        used = "newton"
        if not np.all(np.isfinite(v0)) or (history and history[-1] > history[0]):
            v0 = np.zeros(N + 2)
        try:
            v0, residual, k = _newton(eq, N, forcing, v0, map_tol, target)
        except (RegimeExit, np.linalg.LinAlgError) as exc:
            raise PeriodicOrbitError(f"no periodic orbit found: {exc}") from exc
        n_iter += k
        history.append(residual)
        converged = residual <= target(v0)
    if not converged:
        raise PeriodicOrbitError(
            f"no periodic orbit found (residual {residual:.3e}, target {target(v0):.3e})")
    w0 = GalerkinState.from_vector(v0)
    sol = PeriodicSolution(w0=w0, period=forcing.period, orbit=_orbit(eq, w0, forcing, map_tol),
                           residual=residual, forcing=forcing, method=used,
                           iterations=n_iter, quadrature_defect=defect, history=tuple(history))
    if with_floquet:
        mult = floquet_multipliers(sol, eq, tol=map_tol)
        rate = -math.log(abs(mult[0])) / sol.period if abs(mult[0]) > 0 else float("inf")
        sol = PeriodicSolution(**{**sol.__dict__, "floquet": tuple(mult), "contraction_rate": rate})
    return sol


def floquet_multipliers(sol: PeriodicSolution, eq: Equilibrium,
                        tol: float = MAP_TOL) -> list[complex]:
    """Eigenvalues of the finite-difference monodromy, by modulus descending."""
    if sol.forcing is None:
        raise ValueError("solution carries no forcing")
    N = sol.w0.N
    model = get_model(eq, N)
    v0 = sol.w0.to_vector()
    base = _period_flow(model, v0, sol.forcing, np.array([sol.period]), tol)[-1]
    M = _monodromy(eq, N, sol.forcing, v0, base, tol)
    ev = np.linalg.eigvals(M)
    order = np.lexsort((-ev.imag, -np.abs(ev)))
    return [complex(x) for x in ev[order]]


def _orbit_interpolant(sol: PeriodicSolution) -> CubicSpline:
    vecs = sol.orbit.vectors()
    vecs[-1] = vecs[0]
    return CubicSpline(sol.orbit.times, vecs, axis=0, bc_type="periodic")


def orbit_at(sol: PeriodicSolution, t: np.ndarray) -> np.ndarray:
    """Periodic extension of the stored orbit, cubic interpolation."""
    spline = _orbit_interpolant(sol)
    return spline(np.mod(np.asarray(t, dtype=float), sol.period))


def convergence_to_orbit(sol: PeriodicSolution, perturbation: GalerkinState, horizon: float,
                         eq: Equilibrium, n_out: int = 401, tol: float = MAP_TOL,
                         floor: float | None = None) -> float:
    """Exponential rate at which the trajectory from w0 + perturbation approaches the orbit.

    The distance is the scaled norm of w(t) - w_per(t). Samples below
    ``floor`` (default 1e3 times the interpolation error of the stored
    orbit) are left out of the log-linear fit. Returns 0 when the
    perturbation is zero.
    """
    if perturbation.N != sol.w0.N:
        raise ValueError("perturbation has the wrong truncation")
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    pert = perturbation.to_vector()
    model = get_model(eq, sol.w0.N)
    s = model.scales
    if not np.any(pert):
        return 0.0
    forcing = sol.forcing
    times = np.linspace(0.0, horizon, n_out)
    traj = flow(model, sol.w0.to_vector() + pert, forcing, 0.0, times, tol)
    ref = orbit_at(sol, times)
    dist = np.linalg.norm((traj - ref) / s, axis=1)
    if floor is None:
        mid = 0.5 * (sol.orbit.times[:-1] + sol.orbit.times[1:])
        exact = flow(model, sol.w0.to_vector(), forcing, 0.0, mid, tol)
        interp_err = float(np.max(np.linalg.norm((orbit_at(sol, mid) - exact) / s, axis=1)))
        floor = 1e3 * max(interp_err, tol * (scaled_norm(sol.w0.to_vector(), s)
                                             + _amplitude_scale(forcing, eq)))
    mask = dist > floor
    if mask.sum() < 3:
        raise ValueError("distance fell below the resolution floor too quickly to fit")
    # keep the leading run above the floor
    stop = np.argmin(mask) if not mask.all() else mask.size
    t, d = times[:stop], dist[:stop]
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(d), rcond=None)
    return float(-coef[0])
