"""Entropy production of first-order dissipation tensors in the rest frame."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import DissipationCoeffs, derive_coefficients
from .dissipation import DissipationTensors, GeneralAnsatz, ansatz_rest_frame
from .equivalence import (
    DEFAULT_SCALES,
    GradientEnsemble,
    ResidualFit,
    ShiftSpec,
    apply_shift,
    eckart_ansatz,
    fit_slope,
    sample_euler_ensemble,
)
from .kinematics import FluidState, RestFrameGradients
from .thermo import GasParams, ThermoState


@dataclass
class EntropyReport:
    q: float
    decomposition: dict[str, float] = field(default_factory=dict)


def _theta(state) -> float:
    if isinstance(state, FluidState):
        if not state.at_rest:
            raise ValueError("entropy production is evaluated in the rest frame")
        return state.theta
    return state.theta


def _production_parts(theta, grads, dT, dN) -> dict[str, np.ndarray]:
    """Per-block contributions, batched over leading axes."""
    gu = np.asarray(grads.grad_u, dtype=float)
    div = np.trace(gu, axis1=-2, axis2=-1)
    eye = np.eye(3)
    sym_tf = 0.5 * (gu + np.swapaxes(gu, -1, -2)) - (div / 3.0)[..., None, None] * eye
    dTs = dT[..., 1:, 1:]
    trace = np.trace(dTs, axis1=-2, axis2=-1)
    heat_vec = np.asarray(grads.grad_theta) + theta * np.asarray(grads.u_dot)
    heat = -np.asarray(grads.theta_dot) * dT[..., 0, 0] / theta**2 - np.sum(heat_vec * dT[..., 1:, 0], axis=-1) / theta**2
    # antisymmetric part of grad u drops out because Delta T is symmetric
    shear = -np.sum(sym_tf * dTs, axis=(-2, -1)) / theta
    bulk = -(div / 3.0) * trace / theta
    diffusion = -np.asarray(grads.psi_dot) * dN[..., 0] - np.sum(np.asarray(grads.grad_psi) * dN[..., 1:], axis=-1)
    return {"heat": heat, "shear": shear, "bulk": bulk, "diffusion": diffusion}


def production_batch(theta: float, grads, dT, dN) -> np.ndarray:
    parts = _production_parts(theta, grads, dT, dN)
    return parts["heat"] + parts["shear"] + parts["bulk"] + parts["diffusion"]


def entropy_production(
    params: GasParams,
    state: FluidState | ThermoState,
    rg: RestFrameGradients,
    tensors: DissipationTensors,
) -> EntropyReport:
    """Entropy production ``Q`` for rest-frame gradients and tensors.

    The decomposition splits ``Q`` by tensor block; for the Eckart model
    the four parts are the classical heat, shear, bulk and diffusion
    quadratic forms.
    """
    theta = _theta(state)
    parts = _production_parts(theta, rg, tensors.dT, tensors.dN)
    dec = {k: float(v) + 0.0 for k, v in parts.items()}  # + 0.0 folds -0.0
    return EntropyReport(q=float(sum(dec.values())), decomposition=dec)


def eckart_quadratic_form(state: FluidState | ThermoState, rg: RestFrameGradients, c: DissipationCoeffs) -> dict[str, float]:
    th = state.thermo if isinstance(state, FluidState) else state
    theta = th.theta
    eta, zeta, chi, mu = c.evaluate(th)
    hv = rg.grad_theta + theta * rg.u_dot
    return {
        "heat": float(chi / theta**2 * hv @ hv),
        "shear": float(eta / (2.0 * theta) * np.sum(rg.shear**2)),
        "bulk": float(zeta / theta * rg.div_u**2),
        "diffusion": float(mu * rg.grad_psi @ rg.grad_psi),
    }


def ansatz_production(a: GeneralAnsatz, theta: float, ens) -> np.ndarray:
    dT, dN = ansatz_rest_frame(a, ens)
    return production_batch(theta, ens, dT, dN)


def sample_random_gradients(n: int, rng: np.random.Generator) -> GradientEnsemble:
    """Unconstrained rest-frame gradients, every entry uniform in [-1, 1]."""
    return GradientEnsemble(
        rng.uniform(-1, 1, n),
        rng.uniform(-1, 1, (n, 3)),
        rng.uniform(-1, 1, (n, 3)),
        rng.uniform(-1, 1, (n, 3, 3)),
        rng.uniform(-1, 1, n),
        rng.uniform(-1, 1, (n, 3)),
    )


DEFAULT_COEFFS = DissipationCoeffs(eta=1.0, zeta=0.5, chi=1.0, mu=1.0)


def delta_q_order(
    params: GasParams,
    state: ThermoState,
    shift: ShiftSpec,
    scales=DEFAULT_SCALES,
    base: GeneralAnsatz | None = None,
    c: DissipationCoeffs | None = None,
    samples: int = 200,
    seed: int = 0,
) -> ResidualFit:
    """Scaling of the change in ``Q`` under ``shift`` with the coefficient size.

    ``base`` (default: the Eckart model for ``c``) and the shift payload
    are both multiplied by each ``eps``. The RMS of ``Q_after - Q_before``
    over an ideal-flow ensemble is fitted against ``eps``.
    """
    if base is None:
        base = eckart_ansatz(params, state, c or DEFAULT_COEFFS)
    res = []
    for eps in scales:
        ens = sample_euler_ensemble(params, state, samples, eps, np.random.default_rng(seed))
        a0 = base.scaled(eps)
        a1 = apply_shift(a0, params, state, shift.scaled(eps))
        dq = ansatz_production(a1, state.theta, ens) - ansatz_production(a0, state.theta, ens)
        res.append(float(np.sqrt(np.mean(dq**2))))
    return fit_slope(scales, res)


@dataclass
class EntropySignReport:
    eps: float
    samples: int
    min_q: float
    min_q_over_eps: float
    k_fit: float
    bound: float
    eckart_min_q: float

    @property
    def ok(self) -> bool:
        return self.min_q >= -self.bound and self.eckart_min_q >= 0.0


def new_model_entropy_sign(
    params: GasParams,
    state: ThermoState,
    c: DissipationCoeffs,
    samples: int = 10_000,
    eps: float = 1e-3,
    fit_scales=(1e-2, 3e-3),
    seed: int = 0,
) -> EntropySignReport:
    """Leading-order non-negativity of ``Q`` for the new model.

    ``c`` holds unit-size coefficients which are scaled by ``eps``. The
    quadratic envelope ``K`` is fitted on independent ensembles at the
    ``fit_scales`` (twice the worst ``max(-Q)/eps^2`` seen) and then
    checked at ``eps``.
    """
    d = derive_coefficients(params, state, c)
    new = GeneralAnsatz.new_theory(state, d, c)
    eck = eckart_ansatz(params, state, c)
    rng = np.random.default_rng(seed)

    k = 0.0
    for s in fit_scales:
        ens = sample_euler_ensemble(params, state, samples, s, rng)
        q = ansatz_production(new.scaled(s), state.theta, ens)
        k = max(k, 2.0 * max(0.0, float(-q.min())) / s**2)

    ens = sample_euler_ensemble(params, state, samples, eps, rng)
    if eps == 0.0:
        q = np.zeros(samples)
        qe = q
    else:
        q = ansatz_production(new.scaled(eps), state.theta, ens)
        qe = ansatz_production(eck.scaled(eps), state.theta, ens)
    qmin = float(q.min())
    return EntropySignReport(
        eps=eps,
        samples=samples,
        min_q=qmin,
        min_q_over_eps=qmin / eps if eps else 0.0,
        k_fit=k,
        bound=k * eps**2,
        eckart_min_q=float(qe.min()),
    )
