"""HKM definiteness checks and characteristic speeds of the principal symbol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import (
    CausalityStatus,
    DissipationCoeffs,
    causality_status,
    derive_coefficients,
)
from .dissipation import BTensor, assemble_b_tensor
from .kinematics import FluidState, boost_to_rest
from .thermo import GasParams, ThermoState

DEF_TOL = 1e-12
SPEED_TOL = 1e-6
N_SAMPLES = 4001
ROOT_TOL = 1e-12


class DegenerateDiffusion(ValueError):
    """The diffusion block of B vanishes (mu <= 0); five-field HKM needs mu > 0."""


class RootFindingError(RuntimeError):
    def __init__(self, msg, taus=None, dets=None):
        super().__init__(msg)
        self.taus = taus
        self.dets = dets


@dataclass
class HkmReport:
    time_matrix: np.ndarray
    space_matrix: np.ndarray
    time_eigs: np.ndarray
    space_eigs: np.ndarray
    verdict: tuple[bool, bool]
    # smallest |eigenvalue| margins over every tested spatial direction
    time_margin: float = 0.0
    space_margin: float = 0.0

    @property
    def ok(self) -> bool:
        return all(self.verdict)


@dataclass
class SpeedSpectrum:
    direction: np.ndarray
    speeds: list[float]
    multiplicities: list[int] = field(default_factory=list)

    @property
    def max_speed(self) -> float:
        return max(abs(s) for s in self.speeds)

    @property
    def min_speed(self) -> float:
        return min(abs(s) for s in self.speeds)


def _rest_frame_b(b: BTensor, state: FluidState) -> BTensor:
    if state.at_rest:
        return b
    return b.transformed(boost_to_rest(state.u4))


def _spatial_basis(rng: np.random.Generator | None = None) -> list[np.ndarray]:
    dirs = [np.array([0.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 0.0]), np.array([0.0, 0.0, 0.0, 1.0])]
    rng = rng or np.random.default_rng(12345)
    v = rng.normal(size=3)
    dirs.append(np.concatenate([[0.0], v / np.linalg.norm(v)]))
    return dirs


def hkm_check(b: BTensor, state: FluidState, rng: np.random.Generator | None = None) -> HkmReport:
    """Check ``B H H V V < 0`` and ``B N N V V > 0`` with ``H = -U``.

    The spatial condition is checked on the three rest-frame axes plus a
    random rotation as a spot check of isotropy.
    """
    br = _rest_frame_b(b, state)
    h = np.array([1.0, 0.0, 0.0, 0.0])  # -U_beta in the rest frame
    tm = br.contract(h, h)
    if tm[4, 4] >= -DEF_TOL:
        raise DegenerateDiffusion("diffusion block B^{4b4d} H_b H_d is not negative; need mu > 0")
    time_eigs = np.linalg.eigvalsh(0.5 * (tm + tm.T))

    space_mats = [br.contract(n, n) for n in _spatial_basis(rng)]
    space_eigs_all = [np.linalg.eigvalsh(0.5 * (m + m.T)) for m in space_mats]
    neg_def = bool(np.all(time_eigs < -DEF_TOL))
    pos_def = bool(all(np.all(e > DEF_TOL) for e in space_eigs_all))
    return HkmReport(
        time_matrix=tm,
        space_matrix=space_mats[0],
        time_eigs=time_eigs,
        space_eigs=space_eigs_all[0],
        verdict=(neg_def, pos_def),
        time_margin=float(-time_eigs.max()),
        space_margin=float(min(e.min() for e in space_eigs_all)),
    )


def _symbol_parts(br: BTensor, direction: np.ndarray):
    """``M(tau) = tau^2 M2 + tau M1 + M0`` for ``xi = (-tau, direction)``."""
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    n = np.concatenate([[0.0], direction])
    m2 = br.contract(e0, e0)
    m1 = -(br.contract(e0, n) + br.contract(n, e0))
    m0 = br.contract(n, n)
    return m2, m1, m0


def _neg_count(m2, m1, m0, tau) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    mats = tau[:, None, None] ** 2 * m2 + tau[:, None, None] * m1 + m0
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    return np.sum(np.linalg.eigvalsh(mats) < 0.0, axis=-1)


def _refine(count, a, b, ca, cb, out, tol):
    if ca == cb:
        return
    if b - a <= tol:
        out.append((0.5 * (a + b), abs(int(cb) - int(ca))))
        return
    mid = 0.5 * (a + b)
    cm = count(mid)
    _refine(count, a, mid, ca, cm, out, tol)
    _refine(count, mid, b, cm, cb, out, tol)


def signal_speeds(
    b: BTensor,
    state: FluidState,
    direction,
    tau_max: float = 2.0,
    n_samples: int = N_SAMPLES,
    tol: float = ROOT_TOL,
) -> SpeedSpectrum:
    """Real roots ``tau`` of ``det B(xi, xi) = 0`` with ``xi = (-tau, direction)``.

    The symbol is a symmetric matrix for every real ``tau``, so roots are
    located as jumps of its negative-eigenvalue count (this also catches
    roots of even multiplicity, which a plain determinant sign change
    misses). Jumps found on a uniform grid are refined by bisection.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    br = _rest_frame_b(b, state)
    m2, m1, m0 = _symbol_parts(br, direction)
    size = m0.shape[0]
    if np.any(np.linalg.eigvalsh(0.5 * (m2 + m2.T)) >= 0):
        raise RootFindingError("time matrix is not negative definite; speeds are not all real")

    def count(t):
        return int(_neg_count(m2, m1, m0, t)[0])

    while True:
        taus = np.linspace(-tau_max, tau_max, n_samples)
        counts = _neg_count(m2, m1, m0, taus)
        if counts[0] == size and counts[-1] == size:
            break
        if tau_max > 1e3:
            dets = np.linalg.det(taus[:, None, None] ** 2 * m2 + taus[:, None, None] * m1 + m0)
            raise RootFindingError("roots escape the sampling window", taus, dets)
        tau_max *= 2.0

    roots: list[tuple[float, int]] = []
    for k in np.nonzero(np.diff(counts))[0]:
        _refine(count, taus[k], taus[k + 1], counts[k], counts[k + 1], roots, tol)
    total = sum(mult for _, mult in roots)
    if total != 2 * size:
        dets = np.linalg.det(taus[:, None, None] ** 2 * m2 + taus[:, None, None] * m1 + m0)
        raise RootFindingError(f"found {total} roots (with multiplicity), expected {2 * size}", taus, dets)
    roots.sort()
    speeds = [r for r, mult in roots for _ in range(mult)]
    return SpeedSpectrum(direction=direction, speeds=speeds, multiplicities=[mult for _, mult in roots])


def random_directions(n: int, seed: int = 0) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def spectral_status(max_speed: float, min_speed: float, tol: float = SPEED_TOL) -> CausalityStatus:
    if max_speed > 1.0 + tol:
        return CausalityStatus.ACAUSAL
    if min_speed >= 1.0 - tol:
        return CausalityStatus.SHARPLY_CAUSAL
    return CausalityStatus.CAUSAL


@dataclass
class CausalityCertificate:
    algebraic: CausalityStatus
    spectral: CausalityStatus
    max_speed: float
    min_speed: float
    hkm: HkmReport
    spectra: list[SpeedSpectrum]
    agree: bool

    @property
    def ok(self) -> bool:
        return self.hkm.ok and self.algebraic is not CausalityStatus.ACAUSAL and self.agree


def causality_certificate(
    params: GasParams,
    state: FluidState | ThermoState,
    c: DissipationCoeffs,
    n_directions: int = 20,
    seed: int = 0,
) -> CausalityCertificate:
    if isinstance(state, ThermoState):
        state = FluidState.moving(state)
    d = derive_coefficients(params, state.thermo, c)
    b = assemble_b_tensor(state, d, c)
    hkm = hkm_check(b, state)
    spectra = [signal_speeds(b, state, n) for n in random_directions(n_directions, seed)]
    vmax = max(s.max_speed for s in spectra)
    vmin = min(s.min_speed for s in spectra)
    alg = causality_status(c, d, state.thermo)
    spec = spectral_status(vmax, vmin)
    return CausalityCertificate(alg, spec, vmax, vmin, hkm, spectra, agree=alg is spec)
