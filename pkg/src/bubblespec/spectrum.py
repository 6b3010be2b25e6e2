"""Roots of Q, the decay-rate lower bound and the sector property.

Roots are located with the argument principle: the winding number of Q
along a rectangle boundary counts its zeros (no poles may lie inside), the
rectangle is bisected until each piece holds one zero, and Newton's method
with the analytic derivative polishes it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._kernels import quartic_partial
from .linear_operator import PoleError, eval_Q, eval_Q_prime
from .params import Equilibrium


class RootFindingError(RuntimeError):
    """Winding count and polished roots could not be reconciled."""


class SectorViolation(ValueError):
    """A root lies in the closed right half plane."""


@dataclass(frozen=True)
class SpectralRoot:
    tau: complex
    residual: float
    newton_iters: int
    multiplicity: int = 1


@dataclass(frozen=True)
class RateBound:
    beta: float
    epsilon_used: float
    branch_terms: tuple[float, float, float]
    delta_disc: float
    binding_branch: int


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("rectangle must have positive width and height")

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= z.real <= self.re_max + pad
                and self.im_min - pad <= z.imag <= self.im_max + pad)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def split(self) -> tuple["Rectangle", "Rectangle"]:
        w = self.re_max - self.re_min
        h = self.im_max - self.im_min
        if w >= h:
            m = 0.5 * (self.re_min + self.re_max)
            return (Rectangle(self.re_min, m, self.im_min, self.im_max),
                    Rectangle(m, self.re_max, self.im_min, self.im_max))
        m = 0.5 * (self.im_min + self.im_max)
        return (Rectangle(self.re_min, self.re_max, self.im_min, m),
                Rectangle(self.re_min, self.re_max, m, self.im_max))


# ---------------------------------------------------------------------------
# Quartic sum  sum_{j>=1} 1/(j^4 + B^2)

_DIRECT_LIMIT = 1e-3


def _quartic_g(y: float) -> float:
    """(sinh y + sin y)/(cosh y - cos y) - 2/y without cancellation."""
    if y > 4.0:
        e1 = math.exp(-y)
        e2 = e1 * e1
        f = (1.0 - e2 + 2.0 * math.sin(y) * e1) / (1.0 + e2 - 2.0 * math.cos(y) * e1)
        return f - 2.0 / y
    t = y ** 4
    num = 0.0
    den = 0.0
    tk = 1.0
    for k in range(0, 30):
        f1 = math.factorial(4 * k + 1)
        f2 = math.factorial(4 * k + 2)
        if k > 0:
            num += tk * (1.0 / f1 - 2.0 / f2)
        den += tk / f2
        tk *= t
    return num / (den * y)


def quartic_sum(B: float, tol: float = 1e-15) -> float:
    """sum_{j>=1} 1/(j^4 + B^2).

    For B > 1e-3 uses the closed form pi g(y) / (2 sqrt(2) c^3) with
    c = sqrt(B), y = pi sqrt(2) c, where g subtracts the 2/y pole of the
    sinh/cosh ratio analytically. Smaller B uses direct summation with an
    integral tail estimate accurate to ``tol``.
    """
    B = float(B)
    if not (B > 0.0 and math.isfinite(B)):
        raise ValueError("B must be positive and finite")
    if B > _DIRECT_LIMIT:
        c = math.sqrt(B)
        y = math.pi * math.sqrt(2.0) * c
        return math.pi * _quartic_g(y) / (2.0 * math.sqrt(2.0) * c ** 3)
    return quartic_sum_direct(B, tol)


def quartic_sum_direct(B: float, tol: float = 1e-15) -> float:
    """Partial sum plus the tail estimate int_{n+1/2}^inf x^-4 dx."""
    n = int(math.ceil((1.0 / (3.0 * tol)) ** 0.25 * 10.0))
    n = max(n, 1000)
    return quartic_partial(B, n) + 1.0 / (3.0 * (n + 0.5) ** 3)


# ---------------------------------------------------------------------------
# Decay-rate lower bound


def _branches(eq: Equilibrium, eps: float) -> tuple[float, float, float]:
    p = eq.params
    R = eq.R_star
    th = eq.theta_gamma
    ratio = p.p_inf_star * R / (2.0 * p.p_inf_star * R + 6.0 * p.sigma)
    b1 = (1.0 - math.sqrt(th / (ratio + th))) * math.pi ** 2 * eq.kappa_bar
    stiff = 2.0 * eq.p_star / (p.rho_l * R * R)
    b2 = math.sqrt(eps * stiff)
    delta = (4.0 * p.mu_l / R) ** 2 - 8.0 * p.rho_l * eq.p_star
    b3 = 2.0 * p.mu_l / (p.rho_l * R * R)
    if delta <= 0.0:
        Bq = math.sqrt((1.0 - eps) * stiff) / (math.pi ** 2 * eq.kappa_bar)
        b3 += 4.0 * (1.0 - eps) ** 2 * th * eq.p_star * quartic_sum(Bq) \
            / (math.pi ** 4 * eq.kappa_bar * p.rho_l * R * R)
    else:
        b3 -= math.sqrt(delta) / (2.0 * p.rho_l * R)
    return b1, b2, b3


def _golden_max(f: Callable[[float], float], lo: float, hi: float,
                resolution: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > resolution:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def rate_lower_bound(eq: Equilibrium, eps_resolution: float = 1e-4,
                     eps_range: tuple[float, float] = (0.01, 0.99)) -> RateBound:
    """Maximize the three-branch minimum over epsilon.

    The second branch increases and the third decreases with epsilon, so
    the optimum is either an endpoint or their crossing, which is located
    to machine precision. This makes the result independent of the search
    resolution. A golden-section search at ``eps_resolution`` runs as a
    check on the monotonicity argument; if it ever finds a larger minimum,
    its epsilon is used instead.
    """
    lo, hi = eps_range
    if not 0.0 < lo < hi < 1.0:
        raise ValueError("eps_range must satisfy 0 < lo < hi < 1")

    def objective(e: float) -> float:
        return min(_branches(eq, e))

    def gap(e: float) -> float:
        _, b2, b3 = _branches(eq, e)
        return b2 - b3

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo >= 0.0:
        eps = lo
    elif g_hi <= 0.0:
        eps = hi
    else:
        eps = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    eps_golden = _golden_max(objective, lo, hi, eps_resolution)
    if objective(eps_golden) > objective(eps):
        eps = eps_golden
    terms = _branches(eq, eps)
    beta = min(terms)
    p = eq.params
    delta = (4.0 * p.mu_l / eq.R_star) ** 2 - 8.0 * p.rho_l * eq.p_star
    binding = _binding(terms)
    return RateBound(beta=beta, epsilon_used=eps, branch_terms=terms,
                     delta_disc=delta, binding_branch=binding)


def _binding(terms: tuple[float, float, float]) -> int:
    beta = min(terms)
    tied = [i + 1 for i, t in enumerate(terms) if t <= beta * (1.0 + 1e-12)]
    # at an interior crossing the second and third branches are equal; the
    # third one carries the thermal physics, so it is reported
    return max(tied)


# ---------------------------------------------------------------------------
# Argument principle


def _phase_step(a: complex, b: complex) -> float:
    return cmath.phase(b / a)


class _BoundaryWalker:
    def __init__(self, f: Callable[[complex], complex], max_depth: int = 40):
        self.f = f
        self.max_depth = max_depth
        self.evaluations = 0

    def value(self, z: complex) -> complex:
        self.evaluations += 1
        v = self.f(z)
        if v == 0 or not cmath.isfinite(v):
            raise ZeroDivisionError("function vanishes or is singular on the contour")
        return v

    def edge(self, z0: complex, z1: complex, f0: complex, f1: complex, depth: int = 0) -> float:
        total = _phase_step(f0, f1)
        zm = 0.5 * (z0 + z1)
        fm = self.value(zm)
        left = _phase_step(f0, fm)
        right = _phase_step(fm, f1)
        if abs(total) < math.pi / 4 and abs(left + right - total) < 1e-6:
            return left + right
        if depth >= self.max_depth:
            raise ZeroDivisionError("phase could not be resolved on the contour")
        return self.edge(z0, zm, f0, fm, depth + 1) + self.edge(zm, z1, fm, f1, depth + 1)

    def winding(self, rect: Rectangle, samples_per_edge: int = 32) -> int:
        corners = [complex(rect.re_min, rect.im_min), complex(rect.re_max, rect.im_min),
                   complex(rect.re_max, rect.im_max), complex(rect.re_min, rect.im_max)]
        total = 0.0
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            pts = [a + (b - a) * s / samples_per_edge for s in range(samples_per_edge + 1)]
            vals = [self.value(z) for z in pts]
            for i in range(samples_per_edge):
                total += self.edge(pts[i], pts[i + 1], vals[i], vals[i + 1])
        n = total / (2.0 * math.pi)
        count = int(round(n))
        if abs(n - count) > 1e-3:
            raise ZeroDivisionError("winding number is not close to an integer")
        return count


def _poles_in(eq: Equilibrium, rect: Rectangle, margin: float) -> list[int]:
    if rect.im_min - margin > 0.0 or rect.im_max + margin < 0.0:
        return []
    c = eq.pole_scale
    hits = []
    j_hi = int(math.floor(math.sqrt(max(0.0, -(rect.re_min - margin) / c)))) + 1
    for j in range(1, j_hi + 1):
        pole = -c * j * j
        if rect.re_min - margin <= pole <= rect.re_max + margin:
            hits.append(j)
    return hits


def newton_polish(eq: Equilibrium, tau0: complex, max_iter: int = 100) -> tuple[complex, int]:
    tau = complex(tau0)
    scale = eq.kappa_bar
    for it in range(1, max_iter + 1):
        q = eval_Q(tau, eq)
        dq = eval_Q_prime(tau, eq)
        if dq == 0:
            break
        step = q / dq
        tau -= step
        if abs(step) <= 4e-16 * max(abs(tau), scale):
            return tau, it
    return tau, max_iter


def _make_root(eq: Equilibrium, tau: complex, iters: int, mult: int = 1) -> SpectralRoot:
    if abs(tau.imag) <= 1e-13 * max(abs(tau), eq.kappa_bar):
        tau = complex(tau.real, 0.0)
    return SpectralRoot(tau=tau, residual=abs(eval_Q(tau, eq)), newton_iters=iters,
                        multiplicity=mult)


def _nudge(rect: Rectangle, k: int) -> Rectangle:
    w = rect.re_max - rect.re_min
    h = rect.im_max - rect.im_min
    s = 1e-7 * (1 + k) * math.sqrt(2.0) / 3.0
    return Rectangle(rect.re_min - s * w, rect.re_max + s * w,
                     rect.im_min - s * h * 0.7, rect.im_max + s * h * 0.7)


def _roots_in(eq: Equilibrium, walker: _BoundaryWalker, rect: Rectangle, count: int,
              out: list[SpectralRoot], depth: int = 0) -> None:
    if count == 0:
        return
    size = max(rect.diameter, 1e-300)
    if count == 1:
        tau, iters = newton_polish(eq, rect.center)
        if rect.contains(tau, pad=1e-9 * size) and abs(eval_Q(tau, eq)) <= \
                1e-9 * abs(eval_Q_prime(tau, eq)) * max(abs(tau), eq.kappa_bar):
            out.append(_make_root(eq, tau, iters))
            return
    if size <= 1e-12 * max(abs(rect.center), eq.kappa_bar) or depth > 200:
        tau, iters = newton_polish(eq, rect.center, max_iter=400)
        out.append(_make_root(eq, tau, iters, mult=count))
        return
    first, second = rect.split()
    c1 = _winding(walker, first)
    c2 = count - c1
    if c2 < 0:
        raise RootFindingError("subdivision produced an inconsistent zero count")
    _roots_in(eq, walker, first, c1, out, depth + 1)
    _roots_in(eq, walker, second, c2, out, depth + 1)


def _winding(walker: _BoundaryWalker, rect: Rectangle) -> int:
    for k in range(5):
        try:
            return walker.winding(rect if k == 0 else _nudge(rect, k))
        except ZeroDivisionError:
            continue
    raise RootFindingError("could not compute a stable winding number")


def _dedupe(roots: Sequence[SpectralRoot], scale: float) -> list[SpectralRoot]:
    ordered = sorted(roots, key=lambda r: (r.tau.real, r.tau.imag))
    kept: list[SpectralRoot] = []
    for r in ordered:
        if any(abs(r.tau - k.tau) <= 1e-9 * max(abs(r.tau), abs(k.tau), scale) for k in kept):
            continue
        kept.append(r)
    return sorted(kept, key=lambda r: (-r.tau.real, -r.tau.imag))


def find_roots(eq: Equilibrium, region: Rectangle | None = None,
               max_roots: int = 64) -> list[SpectralRoot]:
    """Zeros of Q inside ``region``, sorted by real part descending.

    Without a region the default search covers
    Re in [-50 pi^2 kappa_bar, re_max], |Im| <= 20 sqrt(2 p*/(rho_l R*^2)),
    split into pole-free pieces along the real axis.
    """
    if region is not None:
        poles = _poles_in(eq, region, 1e-6 * eq.kappa_bar)
        if poles:
            raise PoleError(f"region contains poles of Q for j in {poles}")
        walker = _BoundaryWalker(lambda t: eval_Q(t, eq))
        count = _winding(walker, region)
        if count > max_roots:
            raise RootFindingError(f"region holds {count} zeros, above max_roots={max_roots}")
        found: list[SpectralRoot] = []
        _roots_in(eq, walker, region, count, found)
        roots = _dedupe(found, eq.kappa_bar)
        total = sum(r.multiplicity for r in roots)
        if total != count:
            raise RootFindingError(f"winding count {count} but {total} roots polished")
        return roots
    roots = []
    for rect, mirror in default_pieces(eq):
        part = find_roots(eq, rect, max_roots)
        roots.extend(part)
        if mirror:
            roots.extend(SpectralRoot(r.tau.conjugate(), r.residual, r.newton_iters,
                                      r.multiplicity) for r in part)
    roots = _dedupe(roots, eq.kappa_bar)
    if sum(r.multiplicity for r in roots) > max_roots:
        raise RootFindingError("default region holds more zeros than max_roots")
    return roots


def default_pieces(eq: Equilibrium, re_span_poles: float = 50.0,
                   re_max: float | None = None) -> list[tuple[Rectangle, bool]]:
    """Pole-free rectangles covering the default search window.

    Returns (rectangle, mirror) pairs; mirrored pieces lie in the upper half
    plane and their roots are reflected by conjugation.
    """
    c = eq.pole_scale
    p = eq.params
    re_min = -re_span_poles * c
    re_top = -1e-9 * c if re_max is None else re_max
    im_top = 20.0 * math.sqrt(2.0 * eq.p_star / (p.rho_l * eq.R_star ** 2))
    h = 0.5 * c
    margin = 2e-6 * eq.kappa_bar
    pieces: list[tuple[Rectangle, bool]] = [(Rectangle(re_min, re_top, h, max(im_top, 2 * h)), True)]
    edges = [re_top]
    j = 1
    while -c * j * j > re_min:
        edges.append(-c * j * j)
        j += 1
    edges.append(re_min)
    for k in range(len(edges) - 1):
        hi_edge = edges[k] - (margin if k > 0 else 0.0)
        lo_edge = edges[k + 1] + (margin if k + 1 < len(edges) - 1 else 0.0)
        if hi_edge > lo_edge:
            pieces.append((Rectangle(lo_edge, hi_edge, -h, h), False))
    return pieces


def sector_check(roots: Sequence[SpectralRoot]) -> float:
    """Smallest |arg tau| over the roots; must exceed pi/2."""
    if len(roots) == 0:
        raise ValueError("root set is empty")
    phis = []
    for r in roots:
        tau = r.tau if isinstance(r, SpectralRoot) else complex(r)
        if tau.real >= 0.0:
            raise SectorViolation(f"root {tau} is not in the open left half plane")
        phis.append(abs(cmath.phase(tau)))
    phi = min(phis)
    if not phi > math.pi / 2:
        raise SectorViolation("sector half-angle does not exceed pi/2")
    return phi
