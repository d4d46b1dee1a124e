"""Ideal and dissipative tensors, the 16-coefficient ansatz and the B tensor.

Every constructor here builds ``-Delta T`` / ``-Delta N`` in the form the
model is usually written in and negates once on return, so the returned
:class:`DissipationTensors` always hold ``Delta T`` and ``Delta N``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .coefficients import DerivedCoeffs, DissipationCoeffs, derive_coefficients
from .kinematics import METRIC, FluidState, GradientField, RestFrameGradients, check_normalized
from .thermo import GasParams, ThermoState, eos_from_godunov


@dataclass(frozen=True)
class DissipationTensors:
    dT: np.ndarray
    dN: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dT", np.asarray(self.dT, dtype=float))
        object.__setattr__(self, "dN", np.asarray(self.dN, dtype=float))

    def __add__(self, other: "DissipationTensors") -> "DissipationTensors":
        return DissipationTensors(self.dT + other.dT, self.dN + other.dN)

    def __sub__(self, other: "DissipationTensors") -> "DissipationTensors":
        return DissipationTensors(self.dT - other.dT, self.dN - other.dN)

    def transformed(self, lam: np.ndarray) -> "DissipationTensors":
        return DissipationTensors(lam @ self.dT @ lam.T, lam @ self.dN)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.dT), initial=0.0), np.max(np.abs(self.dN), initial=0.0)))


# ----------------------------------------------------------------------------
# ideal part


def ideal_tensors(state: FluidState) -> tuple[np.ndarray, np.ndarray]:
    th = state.thermo
    u = state.u4
    T = (th.rho + th.p) * np.outer(u, u) + th.p * METRIC
    N = th.n * u
    return T, N


# ----------------------------------------------------------------------------
# the new model


def delta_tensors_covariant(
    state: FluidState, g: GradientField, d: DerivedCoeffs, c: DissipationCoeffs
) -> DissipationTensors:
    eta, _, chi, mu = c.evaluate(state.thermo)
    u = state.u4
    pi = state.projector()
    dtheta = g.dtheta(state)
    du = g.du(state)  # [beta, s] = d_beta U^s
    dpsi = g.dpsi(state)

    div = np.trace(du)
    du_low = du @ METRIC  # [delta, gamma] = d_delta U_gamma
    sym = du_low + du_low.T - (2.0 / 3.0) * METRIC * div
    shear = pi @ sym @ pi
    acc = u @ du  # U^delta d_delta U^alpha
    dtheta_up = METRIC @ dtheta
    u_dtheta = u @ dtheta

    minus_dT = (
        eta * shear
        + d.zeta_tilde * pi * div
        + d.sigma * (np.outer(u, u) * div - np.outer(acc, u) - np.outer(u, acc))
        + chi * (np.outer(u, dtheta_up) + np.outer(dtheta_up, u) - METRIC * u_dtheta)
    )
    minus_dN = mu * (METRIC @ dpsi) + d.sigma_tilde * (u * div - acc)
    return DissipationTensors(-minus_dT, -minus_dN)


def rest_frame_matrices(
    state: FluidState, rg: RestFrameGradients, d: DerivedCoeffs, c: DissipationCoeffs
) -> DissipationTensors:
    """The block-matrix form of the model in the local rest frame."""
    if not state.at_rest:
        raise ValueError("rest_frame_matrices needs a state at rest")
    eta, _, chi, mu = c.evaluate(state.thermo)
    div = rg.div_u
    mt = np.empty((4, 4))
    mt[0, 0] = -chi * rg.theta_dot + d.sigma * div
    mt[0, 1:] = chi * rg.grad_theta - d.sigma * rg.u_dot
    mt[1:, 0] = mt[0, 1:]
    mt[1:, 1:] = eta * rg.shear + (d.zeta_tilde * div - chi * rg.theta_dot) * np.eye(3)
    mn = np.empty(4)
    mn[0] = -mu * rg.psi_dot + d.sigma_tilde * div
    mn[1:] = mu * rg.grad_psi - d.sigma_tilde * rg.u_dot
    return DissipationTensors(-mt, -mn)


# ----------------------------------------------------------------------------
# general first-order ansatz

SCALAR_GROUPS = {
    "P": ("tau", "sigma_c", "iota_check"),
    "R": ("omega", "zeta_tilde", "iota_tilde"),
    "P_hat": ("tau_hat", "sigma_hat", "iota_hat"),
}
VECTOR_GROUPS = {
    "Q": ("nu", "varsigma_check", "upsilon"),
    "Q_hat": ("nu_hat", "varsigma_hat", "upsilon_hat"),
}
# scalar basis: (theta_dot, div u, psi_dot); vector basis: (grad theta, u_dot, grad psi)


@dataclass(frozen=True)
class GeneralAnsatz:
    """Coefficients of the most general equivariant first-order tensors.

    ``-Delta T = UU P + (Pi U + U Pi) Q + Pi R + Pi Pi S`` and
    ``-Delta N = U P_hat + Pi Q_hat`` with

    * ``P, R, P_hat``: scalars on the basis (comoving d theta, div U, comoving d psi)
    * ``Q, Q_hat``: covectors on the basis (d theta, acceleration, d psi)
    * ``S``: trace-free shear with coefficient ``eta``.
    """

    tau: float = 0.0
    sigma_c: float = 0.0
    iota_check: float = 0.0
    nu: float = 0.0
    varsigma_check: float = 0.0
    upsilon: float = 0.0
    omega: float = 0.0
    zeta_tilde: float = 0.0
    iota_tilde: float = 0.0
    eta: float = 0.0
    tau_hat: float = 0.0
    sigma_hat: float = 0.0
    iota_hat: float = 0.0
    nu_hat: float = 0.0
    varsigma_hat: float = 0.0
    upsilon_hat: float = 0.0

    def group(self, name: str) -> np.ndarray:
        keys = SCALAR_GROUPS.get(name) or VECTOR_GROUPS[name]
        return np.array([getattr(self, k) for k in keys])

    def with_group(self, name: str, values) -> "GeneralAnsatz":
        keys = SCALAR_GROUPS.get(name) or VECTOR_GROUPS[name]
        return replace(self, **{k: float(v) for k, v in zip(keys, values)})

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    @classmethod
    def from_array(cls, arr) -> "GeneralAnsatz":
        return cls(*[float(x) for x in arr])

    def __add__(self, other: "GeneralAnsatz") -> "GeneralAnsatz":
        return GeneralAnsatz.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "GeneralAnsatz") -> "GeneralAnsatz":
        return GeneralAnsatz.from_array(self.as_array() - other.as_array())

    def scaled(self, factor: float) -> "GeneralAnsatz":
        return GeneralAnsatz.from_array(self.as_array() * factor)

    @classmethod
    def new_theory(cls, state: ThermoState, d: DerivedCoeffs, c: DissipationCoeffs) -> "GeneralAnsatz":
        eta, _, chi, mu = c.evaluate(state)
        a = cls(
            tau=-chi,
            sigma_c=d.sigma,
            nu=chi,
            varsigma_check=-d.sigma,
            omega=-chi,
            zeta_tilde=d.zeta_tilde,
            eta=eta,
            sigma_hat=d.sigma_tilde,
            iota_hat=-mu,
            varsigma_hat=-d.sigma_tilde,
            upsilon_hat=mu,
        )
        a.check_new_theory(d, c, state)
        return a

    def check_new_theory(self, d: DerivedCoeffs, c: DissipationCoeffs, state: ThermoState | None = None) -> None:
        """Raise unless the coefficients follow the selection rules of the new model."""
        eta, _, chi, mu = c.evaluate(state)
        tests = {
            "nu = chi": self.nu - chi,
            "tau = -chi": self.tau + chi,
            "omega = -chi": self.omega + chi,
            "varsigma_check = -sigma": self.varsigma_check + d.sigma,
            "sigma_c = sigma": self.sigma_c - d.sigma,
            "sigma_hat = sigma_tilde": self.sigma_hat - d.sigma_tilde,
            "varsigma_hat = -sigma_tilde": self.varsigma_hat + d.sigma_tilde,
            "upsilon_hat = mu": self.upsilon_hat - mu,
            "iota_hat = -mu": self.iota_hat + mu,
            "zeta_tilde": self.zeta_tilde - d.zeta_tilde,
            "eta": self.eta - eta,
            "tau_hat = 0": self.tau_hat,
            "nu_hat = 0": self.nu_hat,
            "iota_tilde = 0": self.iota_tilde,
            "iota_check = 0": self.iota_check,
            "upsilon = 0": self.upsilon,
        }
        scale = max(1.0, *(abs(x) for x in self.as_array()))
        bad = [k for k, v in tests.items() if abs(v) > 1e-12 * scale]
        if bad:
            raise ValueError(f"not the new-theory selection: {', '.join(bad)}")


def ansatz_evaluate(a: GeneralAnsatz, state: FluidState, g: GradientField) -> DissipationTensors:
    u = state.u4
    pi = state.projector()
    dtheta = g.dtheta(state)
    du = g.du(state)
    dpsi = g.dpsi(state)
    div = np.trace(du)
    du_low = du @ METRIC
    acc_low = METRIC @ (u @ du)
    u_theta = u @ dtheta
    u_psi = u @ dpsi

    P = a.tau * u_theta + a.sigma_c * div + a.iota_check * u_psi
    Q = a.nu * dtheta + a.varsigma_check * acc_low + a.upsilon * dpsi
    R = a.omega * u_theta + a.zeta_tilde * div + a.iota_tilde * u_psi
    S = a.eta * (du_low + du_low.T - (2.0 / 3.0) * METRIC * div)
    P_hat = a.tau_hat * u_theta + a.sigma_hat * div + a.iota_hat * u_psi
    Q_hat = a.nu_hat * dtheta + a.varsigma_hat * acc_low + a.upsilon_hat * dpsi

    pq = pi @ Q
    minus_dT = np.outer(u, u) * P + np.outer(pq, u) + np.outer(u, pq) + pi * R + pi @ S @ pi
    minus_dN = u * P_hat + pi @ Q_hat
    return DissipationTensors(-minus_dT, -minus_dN)


def ansatz_rest_frame(a: GeneralAnsatz, grads) -> tuple[np.ndarray, np.ndarray]:
    """``(Delta T, Delta N)`` in the local rest frame, batched over leading axes.

    ``grads`` is any object with the attributes of
    :class:`~causalfluid.kinematics.RestFrameGradients`, possibly carrying a
    leading sample axis.
    """
    theta_dot = np.asarray(grads.theta_dot, dtype=float)
    psi_dot = np.asarray(grads.psi_dot, dtype=float)
    grad_u = np.asarray(grads.grad_u, dtype=float)
    div = np.trace(grad_u, axis1=-2, axis2=-1)
    basis_s = (theta_dot, div, psi_dot)
    basis_v = (np.asarray(grads.grad_theta), np.asarray(grads.u_dot), np.asarray(grads.grad_psi))

    def scal(name):
        co = a.group(name)
        return co[0] * basis_s[0] + co[1] * basis_s[1] + co[2] * basis_s[2]

    def vec(name):
        co = a.group(name)
        return co[0] * basis_v[0] + co[1] * basis_v[1] + co[2] * basis_v[2]

    shear = grad_u + np.swapaxes(grad_u, -1, -2) - (2.0 / 3.0) * div[..., None, None] * np.eye(3)
    lead = div.shape
    mt = np.empty(lead + (4, 4))
    mt[..., 0, 0] = scal("P")
    q = vec("Q")
    mt[..., 0, 1:] = q
    mt[..., 1:, 0] = q
    mt[..., 1:, 1:] = a.eta * shear + scal("R")[..., None, None] * np.eye(3)
    mn = np.empty(lead + (4,))
    mn[..., 0] = scal("P_hat")
    mn[..., 1:] = vec("Q_hat")
    return -mt, -mn


# ----------------------------------------------------------------------------
# Godunov-Boillat variables and the second-order coefficient tensor


class GodunovDomainError(ValueError):
    pass


def godunov_vars(state: FluidState) -> np.ndarray:
    """``(U^0/theta, U^1/theta, U^2/theta, U^3/theta, psi)``."""
    th = state.theta
    return np.concatenate([state.u4 / th, [state.thermo.psi]])


def covariant_godunov(w) -> np.ndarray:
    """Lower the Lorentz index of a Godunov-Boillat vector (``U_a / theta``)."""
    w = np.array(w, dtype=float)
    w[..., 0] = -w[..., 0]
    return w


def state_from_godunov(params: GasParams, w) -> FluidState:
    w = np.asarray(w, dtype=float)
    norm = -w[0] ** 2 + w[1] ** 2 + w[2] ** 2 + w[3] ** 2
    if not norm < 0 or w[0] <= 0:
        raise GodunovDomainError(f"Godunov vector is not future timelike (psi.psi = {norm})")
    theta = 1.0 / np.sqrt(-norm)
    u4 = theta * w[:4]
    return FluidState(eos_from_godunov(params, theta, float(w[4])), u4)


@dataclass(frozen=True)
class BTensor:
    """``b[a, beta, c, delta]``; contracts with second derivatives of ``U_c/theta, psi``."""

    b: np.ndarray

    def symbol(self, xi) -> np.ndarray:
        """``B^{a beta c delta} xi_beta xi_delta`` for a covector ``xi``."""
        xi = np.asarray(xi, dtype=float)
        return np.einsum("abcd,b,d->ac", self.b, xi, xi)

    def contract(self, h1, h2) -> np.ndarray:
        return np.einsum("abcd,b,d->ac", self.b, np.asarray(h1, float), np.asarray(h2, float))

    def transformed(self, lam: np.ndarray) -> "BTensor":
        """Apply a Lorentz transformation to all four spacetime indices."""
        big = np.eye(5)
        big[:4, :4] = lam
        return BTensor(np.einsum("ia,jb,kc,ld,abcd->ijkl", big, lam, big, lam, self.b))


def b_tensor_from_coeffs(
    u, theta: float, eta: float, chi: float, mu: float, sigma: float, zeta_tilde: float
) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    pi = METRIC + np.outer(u, u)
    uu = np.outer(u, u)
    th, th2 = theta, theta**2
    e = np.einsum
    b4 = (
        e("ab,cd->abcd", uu, -chi * th2 * uu + sigma * th * pi)
        + e("ab,cd->abcd", pi, -chi * th2 * uu + zeta_tilde * th * pi)
        + chi * th2 * (e("ad,b,c->abcd", pi, u, u) + e("bd,a,c->abcd", pi, u, u))
        - sigma * th * (e("ac,b,d->abcd", pi, u, u) + e("bc,a,d->abcd", pi, u, u))
        + eta * th * (e("ac,bd->abcd", pi, pi) + e("ad,bc->abcd", pi, pi) - (2.0 / 3.0) * e("ab,cd->abcd", pi, pi))
    )
    b = np.zeros((5, 4, 5, 4))
    b[:4, :, :4, :] = b4
    b[4, :, 4, :] = -mu * uu + mu * pi
    return b


def assemble_b_tensor(state: FluidState, d: DerivedCoeffs, c: DissipationCoeffs) -> BTensor:
    check_normalized(state.u4, tol=1e-10 * max(1.0, state.u4[0] ** 2))
    eta, _, chi, mu = c.evaluate(state.thermo)
    return BTensor(b_tensor_from_coeffs(state.u4, state.theta, eta, chi, mu, d.sigma, d.zeta_tilde))


def assemble_b_for(params: GasParams, state: FluidState, c: DissipationCoeffs) -> BTensor:
    return assemble_b_tensor(state, derive_coefficients(params, state.thermo, c), c)

