"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time per call for each kernel and backend, the
speedup, and the largest relative difference between the two results.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from bubblespec import _pykernels
from bubblespec.params import air_water, mass_for_radius, solve_equilibrium
from bubblespec.spectral_basis import mode_table

try:
    from bubblespec import _ckernels
except ImportError:
    _ckernels = None


def _cases():
    p = air_water()
    eq = solve_equilibrium(p, mass_for_radius(p, 1e-5))
    cases = []
    for N in (16, 64):
        t = mode_table(N)
        c = 1e-3 * eq.rho_star * np.random.default_rng(N).standard_normal(N) / np.arange(1, N + 1)
        args = (c, np.ascontiguousarray(t.phi), np.ascontiguousarray(t.dphi),
                np.ascontiguousarray(t.lam), np.ascontiguousarray(t.rule.weights),
                np.ascontiguousarray(t.rule.nodes), eq.kappa_bar, eq.rho_star,
                -2e-4, 1e-4 * eq.rho_star, 3.0, 1.0 / (1.4 * eq.rho_star))
        cases.append((f"nonlinear_projections N={N}", "nonlinear_projections", args))
    cases.append(("mode_sum_partial 1e6 terms", "mode_sum_partial", (0.3 + 2.0j, 1, 10 ** 6)))
    cases.append(("quartic_partial 1e6 terms", "quartic_partial", (1.0, 10 ** 6)))
    return cases


def _flatten(x) -> np.ndarray:
    if isinstance(x, tuple):
        return np.concatenate([np.atleast_1d(np.asarray(v, dtype=complex)) for v in x])
    return np.atleast_1d(np.asarray(x, dtype=complex))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the fallback is available")
    print(f"{'kernel':36s} {'numpy [s]':>12s} {'compiled [s]':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for label, name, a in _cases():
        py = getattr(_pykernels, name)
        number = 1 if "1e6" in label else 200
        t_py = min(timeit.repeat(lambda: py(*a), number=number, repeat=args.repeat)) / number
        if _ckernels is None:
            print(f"{label:36s} {t_py:12.3e}")
            continue
        cy = getattr(_ckernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*a), number=number, repeat=args.repeat)) / number
        r_py, r_cy = _flatten(py(*a)), _flatten(cy(*a))
        diff = float(np.max(np.abs(r_py - r_cy)) / max(np.max(np.abs(r_py)), 1e-300))
        print(f"{label:36s} {t_py:12.3e} {t_cy:12.3e} {t_py / t_cy:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
