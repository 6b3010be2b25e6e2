"""Pure numpy versions of the compiled kernels."""
from __future__ import annotations

import numpy as np


def mode_sum_partial(x: complex, j_start: int, j_end: int) -> complex:
    """sum_{j=j_start}^{j_end} 1 / (j^2 + x), smallest terms first."""
    if j_end < j_start:
        return 0j
    total = 0j
    chunk = 1 << 20
    hi = j_end
    while hi >= j_start:
        lo = max(j_start, hi - chunk + 1)
        j = np.arange(hi, lo - 1, -1, dtype=float)
        total += np.sum(1.0 / (j * j + x))
        hi = lo - 1
    return complex(total)


def quartic_partial(B: float, n: int) -> float:
    """sum_{j=1}^{n} 1 / (j^4 + B^2), smallest terms first."""
    j = np.arange(n, 0, -1, dtype=float)
    j2 = j * j
    terms = 1.0 / (j2 * j2 + B * B)
    # pairwise summation in numpy keeps the rounding error near 1e-16
    return float(np.sum(terms))


def nonlinear_projections(c, phi, dphi, lam, weights, y, kb, rho_star,
                          ratio2m1, z, rdot_over_R, zeta_scale):
    """Pointwise nonlinear density terms projected onto the modes.

    Returns (F0 projections, zeta projections, min density on the nodes).
    """
    u = phi @ c
    uy = dphi @ c
    lapu = -(phi @ (lam * c))
    rho = rho_star + u + z
    f0 = kb * (rho_star * ratio2m1 - u - z) / rho * lapu \
        - kb * rho_star * (1.0 + ratio2m1) * uy * uy / (rho * rho) \
        + rdot_over_R * y * uy
    zeta = (u + y * uy / 3.0) * zeta_scale
    wf = weights * f0
    wz = weights * zeta
    return wf @ phi, wz @ phi, float(rho.min())
