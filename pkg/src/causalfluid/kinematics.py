"""Minkowski tensor algebra with signature (-,+,+,+).

Stored tensors are contravariant; :func:`lower` produces covariant
components on demand. Gradients are stored as derivatives of the
Godunov-Boillat vector ``(U^0/theta, ..., U^3/theta, psi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .thermo import ThermoState

METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])
NORM_TOL = 1e-9


class KinematicsError(ValueError):
    pass


def lower(v):
    """Lower the first (or only) Lorentz index of ``v``."""
    return np.tensordot(METRIC, np.asarray(v, dtype=float), axes=(1, 0))


def minkowski_dot(a, b) -> float:
    return float(-a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])


def four_velocity(v3) -> np.ndarray:
    v3 = np.asarray(v3, dtype=float)
    v2 = float(v3 @ v3)
    if v2 >= 1.0:
        raise KinematicsError(f"superluminal 3-velocity |v|^2={v2}")
    gam = 1.0 / np.sqrt(1.0 - v2)
    return np.concatenate([[gam], gam * v3])


def three_velocity(u4) -> np.ndarray:
    u4 = np.asarray(u4, dtype=float)
    return u4[1:] / u4[0]


def check_normalized(u4, tol: float = NORM_TOL) -> None:
    u4 = np.asarray(u4, dtype=float)
    if u4.shape != (4,):
        raise KinematicsError(f"four-velocity must have 4 components, got shape {u4.shape}")
    norm = minkowski_dot(u4, u4)
    if abs(norm + 1.0) > tol:
        raise KinematicsError(f"four-velocity not normalized: U.U = {norm!r}")
    if u4[0] <= 0:
        raise KinematicsError("four-velocity must be future directed")


def renormalize(u4) -> np.ndarray:
    """Project a timelike vector back onto the unit hyperboloid."""
    u4 = np.asarray(u4, dtype=float)
    norm = minkowski_dot(u4, u4)
    if norm >= 0:
        raise KinematicsError("cannot renormalize a non-timelike vector")
    out = u4 / np.sqrt(-norm)
    return out if out[0] > 0 else -out


def projector(u4) -> np.ndarray:
    """``Pi^{ab} = g^{ab} + U^a U^b``."""
    check_normalized(u4)
    u4 = np.asarray(u4, dtype=float)
    return METRIC + np.outer(u4, u4)


def boost(v3) -> np.ndarray:
    """Pure boost ``Lambda^a_b`` taking the rest-frame velocity (1,0,0,0) to ``v3``."""
    v3 = np.asarray(v3, dtype=float)
    v2 = float(v3 @ v3)
    if v2 >= 1.0:
        raise KinematicsError(f"superluminal boost velocity |v|^2={v2}")
    lam = np.eye(4)
    if v2 == 0.0:
        return lam
    gam = 1.0 / np.sqrt(1.0 - v2)
    lam[0, 0] = gam
    lam[0, 1:] = gam * v3
    lam[1:, 0] = gam * v3
    lam[1:, 1:] += (gam - 1.0) * np.outer(v3, v3) / v2
    return lam


def boost_to_rest(u4) -> np.ndarray:
    """Boost that maps ``u4`` to (1,0,0,0)."""
    return boost(-three_velocity(u4))


@dataclass(frozen=True)
class FluidState:
    thermo: ThermoState
    u4: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u4", np.asarray(self.u4, dtype=float))
        check_normalized(self.u4, tol=1e-12 * max(1.0, self.u4[0] ** 2))

    @classmethod
    def moving(cls, thermo: ThermoState, v3=(0.0, 0.0, 0.0)) -> "FluidState":
        return cls(thermo, four_velocity(v3))

    @property
    def at_rest(self) -> bool:
        return bool(np.allclose(self.u4, [1.0, 0.0, 0.0, 0.0], atol=1e-14, rtol=0))

    @property
    def theta(self) -> float:
        return self.thermo.theta

    def projector(self) -> np.ndarray:
        return METRIC + np.outer(self.u4, self.u4)


@dataclass(frozen=True)
class RestFrameGradients:
    theta_dot: float = 0.0
    grad_theta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    u_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grad_u: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    psi_dot: float = 0.0
    grad_psi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name, shape in (("grad_theta", (3,)), ("u_dot", (3,)), ("grad_u", (3, 3)), ("grad_psi", (3,))):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise KinematicsError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)

    @property
    def div_u(self) -> float:
        return float(np.trace(self.grad_u))

    @property
    def shear(self) -> np.ndarray:
        """Trace-free symmetrized velocity gradient ``S u``."""
        gu = self.grad_u
        return gu + gu.T - (2.0 / 3.0) * np.trace(gu) * np.eye(3)

    def scaled(self, factor: float) -> "RestFrameGradients":
        return RestFrameGradients(
            self.theta_dot * factor,
            self.grad_theta * factor,
            self.u_dot * factor,
            self.grad_u * factor,
            self.psi_dot * factor,
            self.grad_psi * factor,
        )


@dataclass(frozen=True)
class GradientField:
    """``d[beta, c] = d psi^c / d x^beta`` for the Godunov-Boillat vector."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (4, 5):
            raise KinematicsError(f"gradient field must be 4x5, got {d.shape}")
        object.__setattr__(self, "d", d)

    def dtheta(self, state: FluidState) -> np.ndarray:
        """``d theta / d x^beta`` for each beta."""
        u_low = lower(state.u4)
        return state.theta**2 * (self.d[:, :4] @ u_low)

    def du(self, state: FluidState) -> np.ndarray:
        """``du[beta, s] = d U^s / d x^beta``."""
        th = state.theta
        return th * self.d[:, :4] + np.outer(self.dtheta(state), state.u4 / th)

    def dpsi(self, state: FluidState) -> np.ndarray:
        return self.d[:, 4].copy()

    @classmethod
    def from_physical(cls, state: FluidState, dtheta, du, dpsi) -> "GradientField":
        """Build from ``d theta``, ``d U^s`` (indexed [beta, s]) and ``d psi``."""
        th = state.theta
        dtheta = np.asarray(dtheta, dtype=float)
        du = np.asarray(du, dtype=float)
        d = np.empty((4, 5))
        d[:, :4] = (du - np.outer(dtheta, state.u4) / th) / th
        d[:, 4] = dpsi
        return cls(d)


def _transform_gradient(d: np.ndarray, lam: np.ndarray, lam_inv: np.ndarray) -> np.ndarray:
    """Gradient components in the frame with coordinates ``x = lam x'``."""
    out = np.empty_like(d)
    out[:, :4] = lam.T @ d[:, :4] @ lam_inv.T
    out[:, 4] = lam.T @ d[:, 4]
    return out


def gradients_to_rest_frame(state: FluidState, g: GradientField) -> RestFrameGradients:
    lam = boost(three_velocity(state.u4))
    lam_inv = boost(-three_velocity(state.u4))
    dr = _transform_gradient(g.d, lam, lam_inv)
    th = state.theta
    dtheta = -th**2 * dr[:, 0]
    du = th * dr[:, 1:4]
    return RestFrameGradients(
        theta_dot=float(dtheta[0]),
        grad_theta=dtheta[1:],
        u_dot=du[0],
        grad_u=du[1:].T,
        psi_dot=float(dr[0, 4]),
        grad_psi=dr[1:, 4],
    )


def gradients_from_rest_frame(state: FluidState, rg: RestFrameGradients) -> GradientField:
    """Push rest-frame gradient data forward to the lab frame of ``state``."""
    th = state.theta
    dr = np.zeros((4, 5))
    dtheta = np.concatenate([[rg.theta_dot], rg.grad_theta])
    dr[:, 0] = -dtheta / th**2
    dr[0, 1:4] = rg.u_dot / th
    dr[1:, 1:4] = rg.grad_u.T / th
    dr[0, 4] = rg.psi_dot
    dr[1:, 4] = rg.grad_psi
    lam = boost(three_velocity(state.u4))
    lam_inv = boost(-three_velocity(state.u4))
    # inverse of _transform_gradient(., lam, lam_inv)
    return GradientField(_transform_gradient(dr, lam_inv, lam))
