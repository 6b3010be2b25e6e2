"""Radial Dirichlet eigenfunctions of the unit ball and quadrature on it.

phi_j(y) = sin(j pi y) / (sqrt(2 pi) y) is normalized so that
int_{B_1} phi_j phi_k dx = delta_jk, with eigenvalue lambda_j = (j pi)^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SMALL_Y = 1e-8


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in (0, 1) and weights for integrals over the unit ball.

    sum_q weights[q] f(nodes[q]) approximates 4 pi int_0^1 f(y) y^2 dy.
    """
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")

    @property
    def size(self) -> int:
        return self.nodes.size


@lru_cache(maxsize=64)
def _gauss_cached(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    y = 0.5 * (x + 1.0)
    wy = 0.5 * w * 4.0 * math.pi * y * y
    y.setflags(write=False)
    wy.setflags(write=False)
    return y, wy


def gauss_rule(n: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n`` nodes on [0, 1], weighted by 4 pi y^2."""
    if n < 1:
        raise ValueError("node count must be positive")
    y, w = _gauss_cached(int(n))
    return QuadratureRule(y, w)


def default_rule(N: int) -> QuadratureRule:
    """Rule used for products of the first ``N`` modes (4N + 16 nodes)."""
    return gauss_rule(4 * N + 16)


def _check_mode(j: int) -> int:
    if isinstance(j, bool) or int(j) != j or j < 1:
        raise ValueError("mode index must be an integer >= 1")
    return int(j)


def eval_phi(j: int, y):
    """phi_j at radius ``y`` (scalar or array) in [0, 1]."""
    j = _check_mode(j)
    ya = np.asarray(y, dtype=float)
    if np.any((ya < 0.0) | (ya > 1.0)) or not np.all(np.isfinite(ya)):
        raise ValueError("radius must lie in [0, 1]")
    k = j * math.pi
    small = ya < _SMALL_Y
    safe = np.where(small, 1.0, ya)
    out = np.sin(k * safe) / (_SQRT_2PI * safe)
    # series of sin(x)/x, exact to rounding below the threshold
    out = np.where(small, k * (1.0 - (k * ya) ** 2 / 6.0) / _SQRT_2PI, out)
    out = np.where(ya == 1.0, 0.0, out)
    if np.ndim(y) == 0:
        return float(out)
    return out


def eval_dphi(j: int, y):
    """Radial derivative of phi_j."""
    j = _check_mode(j)
    ya = np.asarray(y, dtype=float)
    out = _dphi_table(ya.reshape(-1), np.array([float(j)]))[:, 0].reshape(ya.shape)
    return float(out) if ya.ndim == 0 else out


def _phi_table(y: np.ndarray, modes: np.ndarray) -> np.ndarray:
    k = modes[None, :] * math.pi
    ky = k * y[:, None]
    small = np.abs(ky) < 1e-4
    safe = np.where(small, 1.0, ky)
    sinc = np.where(small, 1.0 - ky * ky / 6.0, np.sin(safe) / safe)
    return k * sinc / _SQRT_2PI


def _dphi_table(y: np.ndarray, modes: np.ndarray) -> np.ndarray:
    k = modes[None, :] * math.pi
    ky = k * y[:, None]
    small = np.abs(ky) < 1e-2
    safe = np.where(small, 1.0, ky)
    # d/dx (sin x / x) = (x cos x - sin x) / x^2, which cancels near 0
    direct = (safe * np.cos(safe) - np.sin(safe)) / (safe * safe)
    x2 = ky * ky
    series = -ky / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0))
    return k * k * np.where(small, series, direct) / _SQRT_2PI


@dataclass(frozen=True)
class ModeTable:
    """phi_j and its radial derivative tabulated on a quadrature rule."""
    rule: QuadratureRule
    phi: np.ndarray       # (nodes, N)
    dphi: np.ndarray      # (nodes, N)
    lam: np.ndarray       # (N,)

    @property
    def N(self) -> int:
        return self.lam.size


@lru_cache(maxsize=32)
def mode_table(N: int, n_nodes: int | None = None) -> ModeTable:
    rule = gauss_rule(n_nodes if n_nodes is not None else 4 * N + 16)
    modes = np.arange(1, N + 1, dtype=float)
    phi = _phi_table(rule.nodes, modes)
    dphi = _dphi_table(rule.nodes, modes)
    lam = (modes * math.pi) ** 2
    for arr in (phi, dphi, lam):
        arr.setflags(write=False)
    return ModeTable(rule, phi, dphi, lam)


def radial_integral(f: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                    rule: QuadratureRule) -> float:
    """Integral over the unit ball of a radial function.

    ``f`` is either a callable evaluated at the nodes or an array of values
    already sampled there.
    """
    values = f(rule.nodes) if callable(f) else f
    values = np.asarray(values, dtype=float)
    if values.shape != rule.nodes.shape:
        raise ValueError("sampled values do not match the rule")
    if not np.all(np.isfinite(values)):
        raise ValueError("integrand is not finite at the nodes")
    return float(np.dot(rule.weights, values))


def gram_matrix(N: int, rule: QuadratureRule | None = None) -> np.ndarray:
    """int phi_j phi_k over the ball for j, k <= N."""
    rule = rule if rule is not None else default_rule(N)
    phi = _phi_table(rule.nodes, np.arange(1, N + 1, dtype=float))
    return phi.T @ (rule.weights[:, None] * phi)


def synthesize(coeffs: np.ndarray, y) -> np.ndarray:
    """u(y) = sum_j c_j phi_j(y)."""
    c = np.asarray(coeffs, dtype=float)
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    return _phi_table(ya, np.arange(1, c.size + 1, dtype=float)) @ c
