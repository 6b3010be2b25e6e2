"""Select the compiled kernels when available, else the numpy fallback.

Set ``BUBBLESPEC_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

BACKEND = "python"
if os.environ.get("BUBBLESPEC_PURE") != "1":
    try:
        from ._ckernels import (mode_sum_partial, nonlinear_projections,
                                quartic_partial)
        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._pykernels import (mode_sum_partial, nonlinear_projections,  # noqa: F811
                             quartic_partial)

__all__ = ["BACKEND", "mode_sum_partial", "nonlinear_projections",
           "quartic_partial"]
