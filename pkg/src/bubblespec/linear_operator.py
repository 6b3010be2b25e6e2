"""Truncated linear generator, characteristic function Q and the data functional.

The linearized system in the variables (R_pert, R_dot, c_1..c_N) has the raw
form ``A0 w' = B w`` where the boundary density z is eliminated through the
linear mass constraint

    z = -a sum_j Gamma_j c_j - (3 rho*/R*) R_pert,   a = 3 gamma / (4 pi (gamma-1)).

Because the mode equations contain z', the thermal rows of ``A0`` are
``I - a Gamma Gamma^T``. The generator is ``A0^{-1} B``, assembled from the
rank-one (Sherman-Morrison) inverse of that block.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from ._kernels import mode_sum_partial
from .params import Equilibrium, gamma_coefficient, mode_arrays
from .state import GalerkinState


class PoleError(ValueError):
    """tau is too close to a pole -pi^2 kappa_bar j^2 of Q."""


class TruncationError(RuntimeError):
    """The requested series tolerance needs more than the hard term cap."""


SERIES_TERM_CAP = 10_000_000


def coupling_factor(eq: Equilibrium, N: int) -> float:
    """1 / (1 - a sum_{j<=N} Gamma_j^2); tends to gamma as N grows."""
    _, gam = mode_arrays(eq, N)
    return 1.0 / (1.0 - eq.a_coupling * float(gam @ gam))


def raw_matrices(eq: Equilibrium, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Left and right matrices of ``A0 w' = B w``."""
    if N < 1:
        raise ValueError("truncation level must be >= 1")
    p = eq.params
    lam, gam = mode_arrays(eq, N)
    A0 = np.eye(N + 2)
    A0[2:, 2:] -= eq.a_coupling * np.outer(gam, gam)
    B = np.zeros((N + 2, N + 2))
    B[0, 1] = 1.0
    B[1, 0] = -eq.b
    B[1, 1] = -4.0 * p.mu_l / (p.rho_l * eq.R_star ** 2)
    B[1, 2:] = -eq.d * gam
    B[2:, 1] = 3.0 * eq.rho_star / eq.R_star * gam
    B[2:, 2:] = np.diag(-eq.kappa_bar * lam)
    return A0, B


def mass_matrix_inverse(eq: Equilibrium, N: int, factor: float | None = None) -> np.ndarray:
    """Closed-form inverse of ``A0``: identity plus ``factor * a Gamma Gamma^T``.

    With the default factor this is exact for the truncation. Passing
    ``factor=gamma`` gives the infinite-mode limit.
    """
    _, gam = mode_arrays(eq, N)
    g = coupling_factor(eq, N) if factor is None else factor
    inv = np.eye(N + 2)
    inv[2:, 2:] += g * eq.a_coupling * np.outer(gam, gam)
    return inv


@dataclass(frozen=True)
class TruncatedOperator:
    N: int
    matrix: np.ndarray
    eq: Equilibrium

    @property
    def size(self) -> int:
        return self.N + 2

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted by real part, descending."""
        ev = np.linalg.eigvals(self.matrix)
        return ev[np.lexsort((-ev.imag, -ev.real))]

    def abscissa(self) -> complex:
        """Rightmost eigenvalue (nonnegative imaginary part on ties)."""
        ev = self.eigenvalues()
        lead = ev[0]
        return complex(lead.real, abs(lead.imag))


def build_operator(eq: Equilibrium, N: int) -> TruncatedOperator:
    """Assemble the generator entry by entry.

    Row 1 is (0, 1, 0..); row 2 is (-b, -4 mu/(rho_l R*^2), -d Gamma).
    With g the coupling factor, the mode rows are

        (0, g (3 rho*/R*) Gamma_j, -kappa_bar lambda_j delta_jk
                                   - g a kappa_bar lambda_k Gamma_j Gamma_k).
    """
    if N < 1:
        raise ValueError("truncation level must be >= 1")
    p = eq.params
    lam, gam = mode_arrays(eq, N)
    g = coupling_factor(eq, N)
    L = np.zeros((N + 2, N + 2))
    L[0, 1] = 1.0
    L[1, 0] = -eq.b
    L[1, 1] = -4.0 * p.mu_l / (p.rho_l * eq.R_star ** 2)
    L[1, 2:] = -eq.d * gam
    L[2:, 1] = g * 3.0 * eq.rho_star / eq.R_star * gam
    e = g * eq.a_coupling * eq.kappa_bar * lam
    L[2:, 2:] = np.diag(-eq.kappa_bar * lam) - np.outer(gam, gam * e)
    L.setflags(write=False)
    return TruncatedOperator(N=N, matrix=L, eq=eq)


# ---------------------------------------------------------------------------
# Mode sum  S(x) = sum_{j>=1} 1/(j^2 + x),  x = tau / (pi^2 kappa_bar)

_SERIES_RADIUS = 0.5
_N_ZETA = 64


@lru_cache(maxsize=1)
def _zeta_even() -> np.ndarray:
    k = np.arange(1, _N_ZETA + 1)
    return _hurwitz_zeta(2.0 * k, 1.0)


def _check_pole(x: complex) -> None:
    if x.real < 0.0:
        j = max(1, round(math.sqrt(-x.real)))
        for jj in (j - 1, j, j + 1):
            if jj >= 1 and abs(x + jj * jj) < 1e-12 * jj * jj:
                raise PoleError(f"tau is at the pole j={jj}")


def _coth_terms(x: complex) -> tuple[complex, complex]:
    r = cmath.sqrt(x)
    if r.real < 0.0:
        r = -r
    zz = math.pi * r
    q = cmath.exp(-2.0 * zz)
    return zz, (1.0 + q) / (1.0 - q)


def mode_sum_closed(x: complex) -> complex:
    """S(x) from (pi sqrt(x) coth(pi sqrt(x)) - 1) / (2x)."""
    x = complex(x)
    _check_pole(x)
    if abs(x) < _SERIES_RADIUS:
        zk = _zeta_even()
        powers = (-x) ** np.arange(_N_ZETA)
        return complex(np.dot(zk, powers))
    zz, coth = _coth_terms(x)
    return (zz * coth - 1.0) / (2.0 * x)


def mode_sum_closed_derivative(x: complex) -> complex:
    """dS/dx = -sum_j 1/(j^2 + x)^2."""
    x = complex(x)
    _check_pole(x)
    if abs(x) < _SERIES_RADIUS:
        zk = _zeta_even()
        k = np.arange(1, _N_ZETA)
        return complex(np.dot(zk[1:] * k * (-1.0) ** k, x ** (k - 1)))
    zz, coth = _coth_terms(x)
    return (2.0 - zz * coth - zz * zz * (coth * coth - 1.0)) / (4.0 * x * x)


def mode_tail_bound(x: complex, n: int) -> float:
    """Upper bound on sum_{j>n} 1/|j^2 + x|, valid for n^2 > 2|x|."""
    s = math.sqrt(abs(x))
    if s == 0.0:
        return 1.0 / n
    return math.atanh(s / n) / s


def mode_sum_series(x: complex, tol: float, cap: int = SERIES_TERM_CAP) -> tuple[complex, int]:
    """Partial sums of S(x) until the tail bound drops below ``tol``.

    Returns (value, number of terms used).
    """
    x = complex(x)
    _check_pole(x)
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    n = max(64, int(math.ceil(math.sqrt(2.0 * abs(x)))) + 1)
    while mode_tail_bound(x, n) >= tol:
        if n >= cap:
            raise TruncationError(
                f"series tail above {tol:.3e} after {cap} terms")
        n = min(cap, 2 * n)
    return mode_sum_partial(x, 1, n), n


# ---------------------------------------------------------------------------
# Q and DATA


def _x_of(tau: complex, eq: Equilibrium) -> complex:
    return complex(tau) / eq.pole_scale


def _interface_poly(tau: complex, eq: Equilibrium) -> tuple[complex, complex]:
    """rho_l R* tau^2 + 4 mu tau / R* - 2 sigma / R*^2 and its derivative."""
    p = eq.params
    R = eq.R_star
    poly = p.rho_l * R * tau * tau + 4.0 * p.mu_l * tau / R - 2.0 * p.sigma / (R * R)
    dpoly = 2.0 * p.rho_l * R * tau + 4.0 * p.mu_l / R
    return poly, dpoly


def _volume_factor(S: complex, eq: Equilibrium) -> complex:
    """4 pi/(3 gamma) + (8 theta/pi) S."""
    return 4.0 * math.pi / (3.0 * eq.params.gamma) + 8.0 * eq.theta_gamma / math.pi * S


def q_leading_coefficient(eq: Equilibrium) -> float:
    """lim Q(tau)/tau^2 for tau -> +infinity."""
    p = eq.params
    return 4.0 * math.pi / (3.0 * p.gamma) * p.rho_l * eq.R_star / (p.R_g * p.T_inf)


def eval_Q(tau: complex, eq: Equilibrium, tol: float | None = None,
           method: str = "closed") -> complex:
    """Characteristic function Q(tau).

    ``method="closed"`` sums the mode series in closed form.
    ``method="series"`` adds terms until the integral tail bound keeps the
    error in Q below ``tol`` (default 1e-12 times the size of the leading
    term), raising :class:`TruncationError` past the term cap.
    """
    tau = complex(tau)
    p = eq.params
    RgT = p.R_g * p.T_inf
    x = _x_of(tau, eq)
    poly, _ = _interface_poly(tau, eq)
    if method == "closed":
        S = mode_sum_closed(x)
    elif method == "series":
        lead = abs(4.0 * math.pi / (3.0 * p.gamma) * poly / RgT) + 4.0 * math.pi * eq.rho_star / eq.R_star
        weight = 8.0 * eq.theta_gamma / math.pi * abs(poly) / RgT
        tol_q = 1e-12 * lead if tol is None else tol
        S, _ = mode_sum_series(x, tol_q / weight if weight > 0.0 else 1.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _volume_factor(S, eq) * poly / RgT + 4.0 * math.pi * eq.rho_star / eq.R_star


def eval_Q_prime(tau: complex, eq: Equilibrium) -> complex:
    """dQ/dtau from the closed form."""
    tau = complex(tau)
    p = eq.params
    RgT = p.R_g * p.T_inf
    x = _x_of(tau, eq)
    poly, dpoly = _interface_poly(tau, eq)
    S = mode_sum_closed(x)
    dS = mode_sum_closed_derivative(x) / eq.pole_scale
    return (8.0 * eq.theta_gamma / math.pi * dS * poly
            + _volume_factor(S, eq) * dpoly) / RgT


def q_at_zero(eq: Equilibrium) -> float:
    """Q(0) = 4 pi (3 p_inf + 4 sigma / R*) / (3 R_g T_inf R*)."""
    p = eq.params
    return 4.0 * math.pi / (3.0 * p.R_g * p.T_inf * eq.R_star) \
        * (3.0 * p.p_inf_star + 4.0 * p.sigma / eq.R_star)


def _gamma_resolvent_sum(x: complex, eq: Equilibrium) -> complex:
    """sum_j Gamma_j^2 / (kappa_bar lambda_j + tau) over all modes."""
    C2 = gamma_coefficient(eq.params.gamma) ** 2
    if abs(x) < _SERIES_RADIUS:
        zk = _zeta_even()
        # sum 1/(j^2 (j^2 + x)) = zeta(4) - zeta(6) x + ...
        inner = complex(np.dot(zk[1:], (-x) ** np.arange(_N_ZETA - 1)))
    else:
        inner = (math.pi ** 2 / 6.0 - mode_sum_closed(x)) / x
    return C2 * inner / eq.pole_scale


def reconstruct_z_linear(w: GalerkinState, eq: Equilibrium) -> float:
    """Boundary density from the linear mass constraint."""
    _, gam = mode_arrays(eq, w.N)
    return float(-eq.a_coupling * (gam @ w.coeffs)
                 - 3.0 * eq.rho_star / eq.R_star * w.R_pert)


def eval_data(tau: complex, w0: GalerkinState, eq: Equilibrium) -> complex:
    """Initial-data functional DATA(tau), so that R_pert^(tau) = DATA/Q.

    The interface term carries the viscous contribution 4 mu R(0)/R* that
    comes with the Laplace transform of R_dot in the stress balance.
    """
    tau = complex(tau)
    p = eq.params
    x = _x_of(tau, eq)
    _check_pole(x)
    lam, gam = mode_arrays(eq, w0.N)
    z0 = reconstruct_z_linear(w0, eq)
    denom = eq.kappa_bar * lam + tau
    modal = complex(np.sum(gam * w0.coeffs / denom)) + z0 * _gamma_resolvent_sum(x, eq)
    g = p.gamma
    interface = p.rho_l * eq.R_star * (w0.R_dot + tau * w0.R_pert) \
        + 4.0 * p.mu_l * w0.R_pert / eq.R_star
    S = mode_sum_closed(x)
    return -g / (g - 1.0) * modal + _volume_factor(S, eq) * interface / (p.R_g * p.T_inf)
