"""Galerkin state vector and the scales used to compare its components."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import Equilibrium


@dataclass(frozen=True)
class GalerkinState:
    """w = (R_pert, R_dot, c_1..c_N).

    ``z`` is the boundary density perturbation. It is normally left as
    ``None`` and reconstructed from the mass constraint; an explicit value
    describes a density profile whose mass may not match the radius yet,
    which :func:`bubblespec.linear_evolution.project_mass_constraint` fixes.
    """
    R_pert: float
    R_dot: float
    coeffs: np.ndarray
    z: Optional[float] = None

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size < 1:
            raise ValueError("state needs at least one mode coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "R_pert", float(self.R_pert))
        object.__setattr__(self, "R_dot", float(self.R_dot))
        if self.z is not None:
            object.__setattr__(self, "z", float(self.z))
        vals = [self.R_pert, self.R_dot] + ([self.z] if self.z is not None else [])
        if not (all(math.isfinite(v) for v in vals) and np.all(np.isfinite(c))):
            raise ValueError("state entries must be finite")

    @property
    def N(self) -> int:
        return self.coeffs.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.R_pert, self.R_dot], self.coeffs))

    @classmethod
    def from_vector(cls, v: np.ndarray, z: Optional[float] = None) -> "GalerkinState":
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("state vector must have length N + 2 with N >= 1")
        return cls(v[0], v[1], v[2:].copy(), z)

    @classmethod
    def zeros(cls, N: int) -> "GalerkinState":
        return cls(0.0, 0.0, np.zeros(N))


def state_scales(eq: Equilibrium, N: int) -> np.ndarray:
    """Natural magnitude of each component: R*, R* sqrt(b), rho*."""
    s = np.full(N + 2, eq.rho_star)
    s[0] = eq.R_star
    s[1] = eq.R_star * math.sqrt(eq.b)
    return s


def scaled_norm(v: np.ndarray, scales: np.ndarray) -> float:
    """Euclidean norm of the dimensionless vector v / scales."""
    return float(np.linalg.norm(np.asarray(v) / scales))


def random_state(eq: Equilibrium, N: int, rng: np.random.Generator,
                 amplitude: float = 1e-3) -> GalerkinState:
    """Gaussian state with each component ``amplitude`` times its scale.

    The boundary density is left to the mass-constraint reconstruction, so
    the state is mass neutral.
    """
    v = amplitude * rng.standard_normal(N + 2) * state_scales(eq, N)
    return GalerkinState.from_vector(v)
