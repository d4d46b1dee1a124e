"""Method-of-lines solver for the full second-order system on a periodic line.

The evolved unknowns are the Godunov-Boillat variables ``w`` (contravariant
``U/theta`` plus ``psi``) and their time derivatives ``v = w_t``. The
semi-discrete system is written in divergence form (see
:mod:`causalfluid._kernels_py`) so the discrete totals of energy,
momentum and particle number are conserved up to time-integration error.
Time stepping is the classical four-stage Runge-Kutta method.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels_py
from .coefficients import CoefficientError, DissipationCoeffs, derive_coefficients
from .dissipation import assemble_b_tensor, godunov_vars
from .hyperbolicity import signal_speeds
from .kinematics import FluidState, four_velocity
from .thermo import GasParams, ThermoState

try:  # compiled backend
    if os.environ.get("CAUSALFLUID_BACKEND", "").lower() in ("python", "numpy"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _kernels_c
except ImportError:  # pragma: no cover - depends on the build
    _kernels_c = None

BACKEND = "cython" if _kernels_c is not None else "python"
COMPONENTS = ("theta", "ux", "uy", "uz", "psi")
KO_DEFAULT = 1e-3


def _kernels(backend: str | None = None):
    name = backend or BACKEND
    if name == "cython":
        if _kernels_c is None:
            raise RuntimeError("compiled kernels are not available")
        return _kernels_c
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


class SolverError(RuntimeError):
    """The state left the physical domain; ``last_valid`` holds the previous step."""

    def __init__(self, msg, last_valid=None):
        super().__init__(msg)
        self.last_valid = last_valid


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    nx: int
    length: float = 10.0
    periodic: bool = True

    def __post_init__(self):
        if self.nx < 16:
            raise ConfigError(f"need nx >= 16, got {self.nx}")
        if not self.length > 0:
            raise ConfigError("domain length must be positive")
        if not self.periodic:
            raise ConfigError("only periodic grids are supported")

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx


@dataclass
class SolverState:
    psi: np.ndarray
    psi_t: np.ndarray
    t: float = 0.0

    def copy(self) -> "SolverState":
        return SolverState(self.psi.copy(), self.psi_t.copy(), self.t)


@dataclass(frozen=True)
class Perturbation:
    """Initial perturbation of the physical fields ``theta, u, psi``.

    ``shape`` is ``"mode"`` (sine with ``mode`` wavelengths per domain) or
    ``"pulse"`` (compact bump ``(1 - r^2)^4`` of half-width ``width``
    centred at ``center``, default mid-domain). ``weights`` scale the
    amplitude per component in the order ``theta, ux, uy, uz, psi``.
    """

    amplitude: float = 1e-3
    shape: str = "mode"
    mode: int = 1
    width: float = 1.0
    center: float | None = None
    weights: tuple[float, ...] = (1.0, 1.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (0.0 <= self.amplitude <= 1e-1):
            raise ConfigError(f"amplitude must lie in [0, 0.1], got {self.amplitude}")
        if self.shape not in ("mode", "pulse"):
            raise ConfigError(f"unknown perturbation shape {self.shape!r}")
        if len(self.weights) != 5:
            raise ConfigError("weights need five entries")
        if self.shape == "pulse" and not self.width > 0:
            raise ConfigError("pulse width must be positive")

    def profile(self, grid: Grid1D) -> np.ndarray:
        x = grid.x
        if self.shape == "mode":
            return np.sin(2.0 * np.pi * self.mode * x / grid.length)
        c = grid.length / 2 if self.center is None else self.center
        r = (x - c) / self.width
        return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 4, 0.0)


@dataclass(frozen=True)
class RunConfig:
    params: GasParams
    coeffs: DissipationCoeffs
    background: ThermoState
    perturbation: Perturbation = field(default_factory=Perturbation)
    nx: int = 128
    length: float = 10.0
    cfl: float = 0.5
    t_end: float = 1.0
    output_stride: int = 10
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    filter: float = KO_DEFAULT
    backend: str | None = None

    def __post_init__(self):
        if not (0.0 < self.cfl <= 0.9):
            raise ConfigError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if self.output_stride < 1:
            raise ConfigError("output_stride must be >= 1")
        for name in ("eta", "zeta", "chi", "mu"):
            if callable(getattr(self.coeffs, name)):
                raise ConfigError("the solver needs constant coefficients")
        eta, zeta, chi, mu = self.coeffs.evaluate()
        if not (chi > 0 and mu > 0 and eta > 0):
            raise ConfigError("B^{a0c0} is singular unless eta, chi and mu are positive")
        try:
            d = derive_coefficients(self.params, self.background, self.coeffs)
        except CoefficientError as exc:
            raise ConfigError(str(exc)) from exc
        if not d.sigma > 0:
            raise ConfigError(f"sigma = {d.sigma} must be positive")

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.nx, self.length)

    @property
    def prm(self) -> np.ndarray:
        eta, zeta, chi, mu = self.coeffs.evaluate()
        p = self.params
        return np.array([p.m, p.gamma, p.s0, eta, zeta, chi, mu])

    @property
    def background_fluid(self) -> FluidState:
        return FluidState.moving(self.background, self.velocity)

    def max_speed(self) -> float:
        fs = self.background_fluid
        d = derive_coefficients(self.params, fs.thermo, self.coeffs)
        b = assemble_b_tensor(fs, d, self.coeffs)
        return signal_speeds(b, fs, (1.0, 0.0, 0.0)).max_speed

    def dt(self) -> float:
        return self.cfl * self.grid.dx / self.max_speed()


# ----------------------------------------------------------------------------
# fields


def godunov_from_fields(params: GasParams, theta, u, psi) -> np.ndarray:
    """Rows of Godunov vectors from ``theta``, spatial ``U^i`` and ``psi``."""
    theta = np.asarray(theta, dtype=float)
    u = np.asarray(u, dtype=float)
    u0 = np.sqrt(1.0 + np.sum(u * u, axis=-1))
    w = np.empty(theta.shape + (5,))
    w[..., 0] = u0 / theta
    w[..., 1:4] = u / theta[..., None]
    w[..., 4] = psi
    return w


def fields_from_godunov(w):
    """``(theta, U^0..U^3, psi)`` from rows of Godunov vectors."""
    w = np.asarray(w)
    norm = -w[..., 0] ** 2 + np.sum(w[..., 1:4] ** 2, axis=-1)
    theta = 1.0 / np.sqrt(-norm)
    return theta, theta[..., None] * w[..., :4], w[..., 4]


def check_state(w) -> None:
    norm = -w[:, 0] ** 2 + np.sum(w[:, 1:4] ** 2, axis=1)
    bad = ~(np.isfinite(norm) & (norm < 0) & (w[:, 0] > 0) & np.isfinite(w[:, 4]))
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise SolverError(f"non-physical state at cell {idx}: w = {w[idx]}")


def background_row(cfg: RunConfig) -> np.ndarray:
    return godunov_vars(cfg.background_fluid)


def initial_state(cfg: RunConfig) -> SolverState:
    grid = cfg.grid
    bg = cfg.background
    prof = cfg.perturbation.profile(grid) * cfg.perturbation.amplitude
    wts = cfg.perturbation.weights
    v3 = np.asarray(cfg.velocity, dtype=float)
    ubg = four_velocity(v3)[1:]
    theta = bg.theta * (1.0 + wts[0] * prof)
    u = ubg[None, :] + prof[:, None] * np.asarray(wts[1:4])[None, :]
    psi = bg.psi + wts[4] * prof
    w = godunov_from_fields(cfg.params, theta, u, psi)
    check_state(w)
    return SolverState(w, ideal_time_derivative(w, grid.dx, cfg.prm), 0.0)


def ideal_time_derivative(w, dx, prm) -> np.ndarray:
    """``w_t`` of the ideal flow, with the solver's face-flux discretisation."""
    ideal = np.array(prm, dtype=float)
    ideal[3:] = 0.0
    zeros = np.zeros_like(w)
    div_f = _kernels_py.face_flux_divergence(w, zeros, dx, ideal)
    jac = np.empty((w.shape[0], 5, 5))
    h = 1e-30
    for c in range(5):
        wc = w.astype(complex)
        wc[:, c] += 1j * h
        D, _ = _kernels_py.fluxes(wc, zeros.astype(complex), zeros.astype(complex), ideal)
        jac[:, :, c] = D.imag / h
    return np.linalg.solve(jac, -div_f[:, :, None])[:, :, 0]


# ----------------------------------------------------------------------------
# time stepping


def semi_discrete_rhs(state: SolverState, cfg: RunConfig, filter: float | None = None) -> np.ndarray:
    ko = cfg.filter if filter is None else filter
    return _kernels(cfg.backend).rhs(state.psi, state.psi_t, cfg.grid.dx, cfg.prm, ko)


def _rk4(w, v, dt, dx, prm, ko, kern):
    def f(a, b):
        return b, kern.rhs(a, b, dx, prm, ko)

    k1w, k1v = f(w, v)
    k2w, k2v = f(w + 0.5 * dt * k1w, v + 0.5 * dt * k1v)
    k3w, k3v = f(w + 0.5 * dt * k2w, v + 0.5 * dt * k2v)
    k4w, k4v = f(w + dt * k3w, v + dt * k3v)
    wn = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    vn = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return wn, vn


def step(state: SolverState, cfg: RunConfig, dt: float | None = None) -> SolverState:
    dt = cfg.dt() if dt is None else dt
    w, v = _rk4(state.psi, state.psi_t, dt, cfg.grid.dx, cfg.prm, cfg.filter, _kernels(cfg.backend))
    try:
        check_state(w)
        if not np.all(np.isfinite(v)):
            raise SolverError("non-finite time derivative")
    except SolverError as exc:
        raise SolverError(f"t = {state.t + dt:.6g}: {exc}", last_valid=state) from None
    return SolverState(w, v, state.t + dt)


def totals(state: SolverState, cfg: RunConfig) -> tuple[float, float, float]:
    """Discrete totals of energy, x-momentum and particle number."""
    D = _kernels_py.conserved(state.psi, state.psi_t, cfg.grid.dx, cfg.prm)
    s = D.sum(axis=0) * cfg.grid.dx
    return float(s[0]), float(s[1]), float(s[4])


def perturbation_norms(state: SolverState, bg_row: np.ndarray, dx: float) -> tuple[float, float]:
    dev = state.psi - bg_row[None, :]
    return float(np.sqrt(dx * np.sum(dev**2))), float(np.max(np.abs(dev)))


@dataclass
class TimeSeries:
    t: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    linf: list[float] = field(default_factory=list)
    total_e: list[float] = field(default_factory=list)
    total_p: list[float] = field(default_factory=list)
    total_n: list[float] = field(default_factory=list)
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)
    final: SolverState | None = None

    def record(self, state: SolverState, cfg: RunConfig, bg_row, snapshot: bool):
        l2, linf = perturbation_norms(state, bg_row, cfg.grid.dx)
        e, p, n = totals(state, cfg)
        self.t.append(state.t)
        self.l2.append(l2)
        self.linf.append(linf)
        self.total_e.append(e)
        self.total_p.append(p)
        self.total_n.append(n)
        if snapshot:
            self.snapshots.append((state.t, state.psi.copy()))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "L2", "Linf", "total_E", "total_P", "total_N"])
            for row in zip(self.t, self.l2, self.linf, self.total_e, self.total_p, self.total_n):
                wr.writerow([repr(float(x)) for x in row])

    def write_snapshots(self, path, x) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "x", "psi0", "psi1", "psi2", "psi3", "psi4"])
            for t, w in self.snapshots:
                for xi, row in zip(x, w):
                    wr.writerow([repr(float(t)), repr(float(xi))] + [repr(float(v)) for v in row])


def integrate(cfg: RunConfig, snapshots: bool = False, state: SolverState | None = None, callback=None) -> TimeSeries:
    state = initial_state(cfg) if state is None else state
    bg = background_row(cfg)
    dt = cfg.dt()
    nsteps = int(math.ceil(cfg.t_end / dt - 1e-12)) if cfg.t_end > 0 else 0
    dt = cfg.t_end / nsteps if nsteps else dt
    ts = TimeSeries()
    ts.record(state, cfg, bg, snapshots)
    for k in range(1, nsteps + 1):
        state = step(state, cfg, dt)
        if callback is not None:
            callback(state)
        if k % cfg.output_stride == 0 or k == nsteps:
            ts.record(state, cfg, bg, snapshots)
    ts.final = state
    return ts


def run_decay(cfg: RunConfig, snapshots: bool = False) -> TimeSeries:
    """Evolve a small perturbation and record its norms."""
    return integrate(cfg, snapshots)


@dataclass
class FrontResult:
    detected: bool
    speed: float
    times: list[float]
    positions: list[float]


def run_front_speed(
    cfg: RunConfig,
    threshold: float = 1e-9,
    fit_from: float = 0.5,
    track: tuple[int, ...] | None = None,
) -> FrontResult:
    """Track the right-going leading edge of a compact pulse.

    The edge is the largest distance from the pulse centre at which any
    tracked component deviates from the background by more than
    ``threshold``. The speed is the least-squares slope of edge position
    against time over the final ``1 - fit_from`` fraction of the run.
    ``track`` defaults to the perturbed components.
    """
    pert = cfg.perturbation
    if pert.shape != "pulse":
        raise ConfigError("front tracking needs a pulse perturbation")
    grid = cfg.grid
    center = grid.length / 2 if pert.center is None else pert.center
    if track is None:
        track = tuple(i for i, wgt in enumerate(pert.weights) if wgt != 0.0)
    bg = background_row(cfg)
    x = grid.x
    right = (x >= center) & (x < center + grid.length / 2)
    dist = x - center
    times: list[float] = []
    pos: list[float] = []
    margin = 3 * grid.dx

    def edge(state):
        dev = np.max(np.abs(state.psi[:, track] - bg[None, list(track)]), axis=1)
        hit = right & (dev > threshold)
        if not np.any(hit):
            return None
        return float(dist[hit].max())

    def cb(state):
        e = edge(state)
        if e is not None and e >= grid.length / 2 - margin:
            raise ConfigError(f"front reached the domain boundary at t = {state.t:.4g}; enlarge the domain")
        times.append(state.t)
        pos.append(math.nan if e is None else e)

    if pert.amplitude == 0.0:
        return FrontResult(False, math.nan, [], [])
    integrate(replace(cfg, output_stride=max(cfg.output_stride, 1)), callback=cb)
    t = np.array(times)
    p = np.array(pos)
    sel = (t >= fit_from * cfg.t_end) & np.isfinite(p)
    if sel.sum() < 3:
        return FrontResult(False, math.nan, times, pos)
    slope = float(np.polyfit(t[sel], p[sel], 1)[0])
    return FrontResult(True, slope, times, pos)
