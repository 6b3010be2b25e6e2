"""Adaptive Lawson (integrating factor) Dormand-Prince 5(4) integrator.

Solves w' = L w + g(t, w) with the stiff linear part propagated exactly.
The matrix L is diagonalized once, in a diagonally rescaled basis where
its eigenvectors are well conditioned, so every exponential needed by the
stages is a vector of scalar exponentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class StepSizeUnderflow(RuntimeError):
    """The controller could not meet the tolerance with a representable step."""


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_BHAT = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                  187 / 2100, 1 / 40])


@dataclass
class SolverStats:
    steps: int = 0
    rejected: int = 0
    rhs_evals: int = 0


class LawsonDP5:
    """Integrator for w' = L w + g(t, w).

    ``scales`` gives the natural size of each component; errors are
    measured in the rescaled variables w / scales with a norm-wise relative
    test against the current state, plus ``atol`` in those units.
    """

    def __init__(self, L: np.ndarray, g: Callable[[float, np.ndarray], np.ndarray],
                 scales: np.ndarray, rtol: float = 1e-10, atol: float = 1e-300,
                 h_min_rel: float = 1e-14, max_steps: int = 2_000_000):
        self.n = L.shape[0]
        self.scales = np.asarray(scales, dtype=float)
        Ls = L * self.scales[None, :] / self.scales[:, None]
        mu, V = np.linalg.eig(Ls)
        self.mu = mu
        self.V = V
        self.Vinv = np.linalg.inv(V)
        self.g = g
        self.rtol = rtol
        self.atol = atol
        self.h_min_rel = h_min_rel
        self.max_steps = max_steps
        self.stats = SolverStats()
        diffs = sorted({round(float(ci - cj), 15) for i, ci in enumerate(_C)
                        for cj in _C[: i + 1]} | {round(1.0 - float(c), 15) for c in _C})
        where = {d: k for k, d in enumerate(diffs)}
        self._diffs = np.array(diffs)
        # stage i: row of exp(c_i h mu), then (j, a_ij, row of exp((c_i - c_j) h mu))
        self._stage_plan = []
        for i in range(1, 7):
            terms = [(j, a, where[round(float(_C[i] - _C[j]), 15)])
                     for j, a in enumerate(_A[i]) if a != 0.0]
            self._stage_plan.append((where[round(float(_C[i]), 15)], terms))
        self._err_plan = [(j, _B[j] - _BHAT[j], where[round(1.0 - float(_C[j]), 15)])
                          for j in range(7) if _B[j] != _BHAT[j]]
        self._ex_h = None
        self._ex = None

    # coordinates: eta = Vinv (w / scales)
    def _to_eta(self, w: np.ndarray) -> np.ndarray:
        return self.Vinv @ (w / self.scales)

    def _to_w(self, eta: np.ndarray) -> np.ndarray:
        return (self.V @ eta).real * self.scales

    def _geta(self, t: float, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = self._to_w(eta)
        self.stats.rhs_evals += 1
        return self._to_eta(self.g(t, w)), w

    def _exps(self, h: float) -> np.ndarray:
        if self._ex_h != h:
            self._ex = np.exp(np.outer(self._diffs * h, self.mu))
            self._ex_h = h
        return self._ex

    def _step(self, t: float, eta: np.ndarray, k1: np.ndarray, h: float):
        ex = self._exps(h)
        ks = [k1]
        for i, (e_idx, terms) in enumerate(self._stage_plan, start=1):
            acc = ex[e_idx] * eta
            for j, a, d_idx in terms:
                acc += (h * a) * ex[d_idx] * ks[j]
            k, w_stage = self._geta(t + _C[i] * h, acc)
            ks.append(k)
        err = np.zeros_like(eta)
        for j, db, d_idx in self._err_plan:
            err += (h * db) * ex[d_idx] * ks[j]
        return acc, w_stage, ks[6], err

    def solve(self, t_span: tuple[float, float], w0: np.ndarray,
              t_out: Sequence[float], h0: float | None = None,
              callback: Callable[[float, np.ndarray], None] | None = None) -> np.ndarray:
        """Integrate from t_span[0] and return states at the times ``t_out``.

        The step is shortened to land on every output time exactly.
        """
        t0, t1 = map(float, t_span)
        t_out = np.asarray(t_out, dtype=float)
        if t_out.size and (t_out[0] < t0 or t_out[-1] > t1 or np.any(np.diff(t_out) < 0)):
            raise ValueError("output times must be sorted and inside the span")
        out = np.empty((t_out.size, self.n))
        t = t0
        w = np.asarray(w0, dtype=float).copy()
        eta = self._to_eta(w)
        k1, _ = self._geta(t, eta)
        span = t1 - t0
        h = h0 if h0 is not None else span / 100.0
        idx = 0
        while idx < t_out.size and t_out[idx] <= t:
            out[idx] = w
            idx += 1
        h_min = self.h_min_rel * max(span, abs(t0), 1e-300)
        while t < t1 and idx <= t_out.size:
            if self.stats.steps + self.stats.rejected > self.max_steps:
                raise StepSizeUnderflow("step budget exhausted")
            target = t_out[idx] if idx < t_out.size else t1
            h_try = min(h, target - t)
            landing = h_try >= target - t
            eta_new, w_new, k_new, err = self._step(t, eta, k1, h_try)
            err_w = (self.V @ err).real
            ws = w / self.scales
            wns = w_new / self.scales
            ref = math.sqrt(max(ws @ ws, wns @ wns))
            denom = self.atol + self.rtol * ref
            e = math.sqrt(err_w @ err_w) / denom if denom > 0 else 0.0
            if not np.isfinite(e):
                e = 1e10
            if e <= 1.0:
                t = target if landing else t + h_try
                eta = eta_new
                w = w_new
                k1 = k_new
                self.stats.steps += 1
                if callback is not None:
                    callback(t, w)
                while idx < t_out.size and t_out[idx] <= t:
                    out[idx] = w
                    idx += 1
                fac = 5.0 if e == 0.0 else min(5.0, max(0.2, 0.9 * e ** (-0.2)))
                if not landing or h_try >= h:
                    h = h_try * fac
                else:
                    h = max(h, h_try * fac)
            else:
                self.stats.rejected += 1
                h = h_try * max(0.1, 0.9 * e ** (-0.2))
                if h < h_min:
                    raise StepSizeUnderflow(f"step size fell below {h_min:.3e} at t={t:.6e}")
        return out
