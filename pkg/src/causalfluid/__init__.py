"""Causal first-order dissipative relativistic fluid with particle diffusion.

Submodules: :mod:`thermo`, :mod:`kinematics`, :mod:`coefficients`,
:mod:`dissipation`, :mod:`hyperbolicity`, :mod:`equivalence`,
:mod:`entropy`, :mod:`solver1d` and :mod:`cli`.
"""

from .coefficients import CausalityStatus, DissipationCoeffs, chi_star, derive_coefficients
from .kinematics import FluidState
from .thermo import GasParams, ThermoState, eos_from_godunov, eos_from_n_theta

__version__ = "0.1.0"

__all__ = [
    "CausalityStatus",
    "DissipationCoeffs",
    "FluidState",
    "GasParams",
    "ThermoState",
    "chi_star",
    "derive_coefficients",
    "eos_from_godunov",
    "eos_from_n_theta",
]
