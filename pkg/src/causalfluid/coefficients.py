"""Derived dissipation coefficients and the causality classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Union

from .thermo import GasParams, ThermoState

Coefficient = Union[float, Callable[[ThermoState], float]]

SHARP_TOL = 1e-10


class CoefficientError(ValueError):
    pass


class CausalityStatus(enum.Enum):
    SHARPLY_CAUSAL = "SHARPLY_CAUSAL"
    CAUSAL = "CAUSAL"
    ACAUSAL = "ACAUSAL"


@dataclass(frozen=True)
class DissipationCoeffs:
    """Shear viscosity, bulk viscosity, heat conductivity and diffusion.

    Each entry is a constant or a callable of :class:`ThermoState`. The
    constructor rejects negative constants; :meth:`require_physical`
    enforces the strict positivity needed by the full five-field model.
    """

    eta: Coefficient
    zeta: Coefficient = 0.0
    chi: Coefficient = 0.0
    mu: Coefficient = 0.0

    def __post_init__(self):
        for name in ("eta", "zeta", "chi", "mu"):
            val = getattr(self, name)
            if callable(val):
                continue
            if not (math.isfinite(val) and val >= 0):
                raise CoefficientError(f"{name} must be finite and non-negative, got {val}")

    def evaluate(self, state: ThermoState | None = None) -> tuple[float, float, float, float]:
        out = []
        for name in ("eta", "zeta", "chi", "mu"):
            val = getattr(self, name)
            if callable(val):
                if state is None:
                    raise CoefficientError(f"{name} is state dependent; a state is required")
                val = float(val(state))
            out.append(float(val))
        return tuple(out)

    def scaled(self, eps: float) -> "DissipationCoeffs":
        if any(callable(getattr(self, k)) for k in ("eta", "zeta", "chi", "mu")):
            raise CoefficientError("scaling is only supported for constant coefficients")
        return DissipationCoeffs(self.eta * eps, self.zeta * eps, self.chi * eps, self.mu * eps)

    def require_physical(self, state: ThermoState | None = None, need_diffusion: bool = True) -> None:
        eta, zeta, chi, mu = self.evaluate(state)
        if not eta > 0:
            raise CoefficientError(f"eta must be positive, got {eta}")
        if not zeta >= 0:
            raise CoefficientError(f"zeta must be non-negative, got {zeta}")
        if not chi > 0:
            raise CoefficientError(f"chi must be positive, got {chi}")
        if need_diffusion and not mu > 0:
            raise CoefficientError(f"mu must be positive, got {mu}")


@dataclass(frozen=True)
class DerivedCoeffs:
    sigma: float
    zeta_tilde: float
    sigma_tilde: float
    zt1: float
    zt2: float
    zt3: float


def _feedback(params: GasParams, h: float) -> float:
    # zt2 = feedback * sigma
    return params.gm1 * (1.0 - params.m / h)


def derive_coefficients(params: GasParams, state: ThermoState, c: DissipationCoeffs) -> DerivedCoeffs:
    eta, zeta, chi, mu = c.evaluate(state)
    gm1, m = params.gm1, params.m
    theta, h = state.theta, state.h
    denom = 1.0 - _feedback(params, h)
    if denom <= 1e-12:
        raise CoefficientError(f"1 - (gamma-1)(1-m/h) = {denom} is not positive")
    zt1 = -gm1 * (2.0 - params.gamma + m / h) * chi * theta
    zt3 = gm1**2 * (m**2 / theta) * mu
    sigma = ((4.0 / 3.0) * eta + zeta + zt1 + zt3) / denom
    zt2 = _feedback(params, h) * sigma
    zeta_tilde = zeta + zt1 + zt2 + zt3
    sigma_tilde = (sigma + chi * theta) / h
    return DerivedCoeffs(sigma, zeta_tilde, sigma_tilde, zt1, zt2, zt3)


def causality_status(
    c: DissipationCoeffs,
    d: DerivedCoeffs,
    state: ThermoState | None = None,
    tol: float = SHARP_TOL,
) -> CausalityStatus:
    eta = c.evaluate(state)[0]
    gap = d.zeta_tilde + eta / 3.0
    # sigma - eta equals the same gap because sigma = 4/3 eta + zeta_tilde
    if abs((d.sigma - eta) - gap) > 1e-9 * max(1.0, abs(d.sigma), abs(eta)):
        raise CoefficientError("derived coefficients violate sigma = 4/3 eta + zeta_tilde")
    if abs(gap) <= tol:
        return CausalityStatus.SHARPLY_CAUSAL
    if gap >= -tol:
        return CausalityStatus.CAUSAL
    return CausalityStatus.ACAUSAL


def chi_star(params: GasParams, state: ThermoState, eta: float, zeta: float, mu: float) -> float:
    """Heat conductivity at which the model becomes sharply causal."""
    if not eta > 0 or zeta < 0 or mu < 0:
        raise CoefficientError("chi_star needs eta > 0, zeta >= 0, mu >= 0")
    gm1, m = params.gm1, params.m
    theta, h = state.theta, state.h
    num = eta / 3.0 + zeta + gm1 * (1.0 - m / h) * eta + gm1**2 * (m**2 / theta) * mu
    den = gm1 * (2.0 - params.gamma + m / h) * theta
    return num / den
