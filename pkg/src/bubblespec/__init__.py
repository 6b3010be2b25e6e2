"""Spectral analysis and simulation of thermally damped radial gas bubbles."""
from ._kernels import BACKEND
from .params import (Equilibrium, EquilibriumError, ParameterError,
                     PhysicalParams, mode_constants, solve_equilibrium)

__version__ = "0.1.0"

__all__ = ["BACKEND", "Equilibrium", "EquilibriumError", "ParameterError",
           "PhysicalParams", "mode_constants", "solve_equilibrium"]
