"""Polytropic ideal-gas thermodynamics in geometric units (c = k_B = 1).

The closure is ``p = n * theta`` together with the polytropic relation
``rho = m n + p / (gamma - 1)``. All states carry the thermal potential
``psi = h / theta - s`` so that the pair ``(theta, psi)`` can serve as the
scalar part of the Godunov-Boillat variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ThermoDomainError(ValueError):
    """Raised for non-physical thermodynamic input (n <= 0, theta <= 0, ...)."""


@dataclass(frozen=True)
class GasParams:
    """Particle rest mass ``m``, adiabatic exponent ``gamma`` and entropy gauge ``s0``."""

    m: float = 1.0
    gamma: float = 4.0 / 3.0
    s0: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ThermoDomainError(f"rest mass must be positive, got m={self.m}")
        if not 1.0 < self.gamma < 2.0:
            raise ThermoDomainError(f"need 1 < gamma < 2, got gamma={self.gamma}")

    @property
    def gm1(self) -> float:
        return self.gamma - 1.0


@dataclass(frozen=True)
class ThermoState:
    n: float
    theta: float
    rho: float
    p: float
    h: float
    s: float
    psi: float

    @property
    def g(self) -> float:
        """Chemical potential (specific Gibbs energy) ``h - theta * s``."""
        return self.h - self.theta * self.s


@dataclass(frozen=True)
class SusceptibilityMatrix:
    """Jacobian of ``(rho, n)`` with respect to ``(theta, psi)``.

    ``a`` is laid out as ``[[rho_theta, rho_psi], [n_theta, n_psi]]``. The
    first partials of ``p(theta, psi)`` are kept alongside because the
    compatibility relation for thermodynamic shifts needs them.
    """

    a: np.ndarray
    p_theta: float
    p_psi: float

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.a))

    def solve(self, d_rho, d_n):
        """Return ``(d_theta, d_psi)`` producing the given ``(d_rho, d_n)``."""
        sol = np.linalg.solve(self.a, np.array([d_rho, d_n], dtype=float))
        return float(sol[0]), float(sol[1])

    def pressure_change(self, d_theta, d_psi):
        return self.p_theta * d_theta + self.p_psi * d_psi


class EulerRates(NamedTuple):
    theta_dot: float
    n_dot: float
    p_dot: float
    rho_dot: float
    psi_dot: float


def _check_positive(**kw):
    for name, val in kw.items():
        if not (val > 0 and math.isfinite(val)):
            raise ThermoDomainError(f"{name} must be positive and finite, got {val}")


def enthalpy(params: GasParams, theta):
    return params.m + params.gamma * theta / params.gm1


def eos_from_n_theta(params: GasParams, n: float, theta: float) -> ThermoState:
    _check_positive(n=n, theta=theta)
    p = n * theta
    rho = params.m * n + p / params.gm1
    h = enthalpy(params, theta)
    s = math.log(theta) / params.gm1 - math.log(n) + params.s0
    psi = h / theta - s
    return ThermoState(n=n, theta=theta, rho=rho, p=p, h=h, s=s, psi=psi)


def density_from_godunov(params: GasParams, theta, psi):
    """Particle density as a function of ``(theta, psi)``.

    Works elementwise on arrays and on complex input (used for complex-step
    differentiation in the solver).
    """
    gm1 = params.gm1
    log_n = psi - params.m / theta - params.gamma / gm1 + np.log(theta) / gm1 + params.s0
    return np.exp(log_n)


def eos_from_godunov(params: GasParams, theta: float, psi: float) -> ThermoState:
    _check_positive(theta=theta)
    if not math.isfinite(psi):
        raise ThermoDomainError(f"psi must be finite, got {psi}")
    n = float(density_from_godunov(params, theta, psi))
    return eos_from_n_theta(params, n, theta)


def susceptibility(params: GasParams, state: ThermoState) -> SusceptibilityMatrix:
    theta, p = state.theta, state.p
    gm1, m = params.gm1, params.m
    # ln p = gamma/(gamma-1) ln theta + psi - m/theta + const
    lt = params.gamma / (gm1 * theta) + m / theta**2
    dlt = -params.gamma / (gm1 * theta**2) - 2.0 * m / theta**3
    p_theta = p * lt
    p_psi = p
    p_tt = p * (lt * lt + dlt)
    p_tp = p_theta
    p_pp = p
    a = np.array(
        [
            [theta * p_tt, theta * p_tp - p_psi],
            [(theta * p_tp - p_psi) / theta**2, p_pp / theta],
        ]
    )
    return SusceptibilityMatrix(a=a, p_theta=p_theta, p_psi=p_psi)


def euler_rates(params: GasParams, state: ThermoState, div_u: float) -> EulerRates:
    """Rest-frame rates of the ideal (dissipation-free) flow for a given expansion."""
    gm1 = params.gm1
    return EulerRates(
        theta_dot=-gm1 * state.theta * div_u,
        n_dot=-state.n * div_u,
        p_dot=-params.gamma * state.p * div_u,
        rho_dot=-(state.rho + state.p) * div_u,
        psi_dot=gm1 * (params.m / state.theta) * div_u,
    )


def euler_rates_general(params: GasParams, state: ThermoState, div_u: float) -> tuple[float, float]:
    """``(theta_dot, psi_dot)`` from energy and number conservation through ``A``.

    Independent of the polytropic closed forms in :func:`euler_rates`; only
    the susceptibility matrix is used.
    """
    sus = susceptibility(params, state)
    return sus.solve(-(state.rho + state.p) * div_u, -state.n * div_u)
