import os
import subprocess
import sys

import numpy as np
import pytest

from causalfluid import _kernels_py as kpy
from causalfluid import solver1d
from causalfluid.coefficients import DissipationCoeffs, chi_star, derive_coefficients
from causalfluid.dissipation import assemble_b_tensor, delta_tensors_covariant, ideal_tensors, state_from_godunov
from causalfluid.kinematics import FluidState, GradientField
from causalfluid.solver1d import (
    ConfigError,
    Grid1D,
    Perturbation,
    RunConfig,
    SolverError,
    SolverState,
    check_state,
    fields_from_godunov,
    godunov_from_fields,
    initial_state,
    integrate,
    run_decay,
    run_front_speed,
    semi_discrete_rhs,
    step,
    totals,
)

HAVE_C = solver1d._kernels_c is not None
COEFFS = DissipationCoeffs(1.0, 0.0, 1.0, 0.1)


def cfg_for(params, s0, **kw):
    base = dict(coeffs=COEFFS, perturbation=Perturbation(1e-2, "mode", weights=(1, 1, 1, 0, 1)), nx=64, filter=0.0)
    base.update(kw)
    return RunConfig(params, background=s0, **base)


# ----------------------------------------------------------------------------
# configuration


def test_grid():
    g = Grid1D(32, length=8.0)
    assert g.dx == 0.25 and g.x[0] == 0.125 and g.x.size == 32
    with pytest.raises(ConfigError):
        Grid1D(8)
    with pytest.raises(ConfigError):
        Grid1D(32, periodic=False)


@pytest.mark.parametrize(
    "kw",
    [
        dict(cfl=0.0),
        dict(cfl=0.95),
        dict(t_end=-1.0),
        dict(coeffs=DissipationCoeffs(1.0, 0.0, 1.0, 0.0)),
        dict(coeffs=DissipationCoeffs(1.0, 0.0, 0.0, 0.1)),
        dict(coeffs=DissipationCoeffs(lambda s: 1.0, 0.0, 1.0, 0.1)),
        dict(output_stride=0),
    ],
)
def test_config_validation(params, s0, kw):
    with pytest.raises(ConfigError):
        cfg_for(params, s0, **kw)


def test_perturbation_validation():
    with pytest.raises(ConfigError):
        Perturbation(0.2)
    with pytest.raises(ConfigError):
        Perturbation(1e-3, "box")
    with pytest.raises(ConfigError):
        Perturbation(1e-3, weights=(1, 1))


def test_field_round_trip(params, rng):
    theta = rng.uniform(0.5, 2, 10)
    u = rng.uniform(-0.5, 0.5, (10, 3))
    psi = rng.normal(size=10)
    th2, u4, psi2 = fields_from_godunov(godunov_from_fields(params, theta, u, psi))
    assert np.allclose(th2, theta) and np.allclose(u4[:, 1:], u) and np.array_equal(psi2, psi)


def test_check_state():
    w = np.tile([1.0, 0.0, 0.0, 0.0, 5.0], (20, 1))
    check_state(w)
    w[3, 1] = 2.0
    with pytest.raises(SolverError):
        check_state(w)


# ----------------------------------------------------------------------------
# the semi-discrete operator


def test_constant_state_rhs(params, s0):
    cfg = cfg_for(params, s0, perturbation=Perturbation(0.0), velocity=(0.3, -0.2, 0.1))
    st = initial_state(cfg)
    assert np.all(st.psi_t == 0)
    assert np.abs(semi_discrete_rhs(st, cfg)).max() <= 1e-13


def test_constant_state_many_steps(params, s0):
    cfg = cfg_for(params, s0, perturbation=Perturbation(0.0), nx=32)
    st = initial_state(cfg)
    w0 = st.psi.copy()
    for _ in range(1000):
        st = step(st, cfg)
    assert np.abs(st.psi - w0).max() <= 1e-13
    assert np.abs(st.psi_t).max() <= 1e-13


def test_l0_is_time_block_of_b(params, rng):
    from causalfluid.thermo import eos_from_n_theta

    g = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])
    for _ in range(20):
        th = eos_from_n_theta(params, rng.uniform(0.5, 2), rng.uniform(0.5, 2))
        c = DissipationCoeffs(*rng.uniform(0.1, 2, 4))
        fs = FluidState.moving(th, rng.uniform(-0.4, 0.4, 3))
        w = np.concatenate([fs.u4 / th.theta, [th.psi]])[None, :]
        prm = np.array([params.m, params.gamma, params.s0, *c.evaluate()])
        b = assemble_b_tensor(fs, derive_coefficients(params, th, c), c).b
        assert np.allclose(kpy.l0_matrix(w, prm)[0], -b[:, 0, :, 0] * g[None, :], atol=1e-12)


def _oracle_wtt(params, c, w, wt, wx, wtx, x_fields, h=1e-5):
    """``w_tt`` at one point from the module tensors and finite differences."""
    def DF(w_, wt_, wx_):
        st = state_from_godunov(params, w_)
        d = np.zeros((4, 5))
        d[0], d[1] = wt_, wx_
        dt = delta_tensors_covariant(st, GradientField(d), derive_coefficients(params, st.thermo, c), c)
        T, N = ideal_tensors(st)
        D = np.concatenate([T[:, 0] + dt.dT[:, 0], [N[0] + dt.dN[0]]])
        F = np.concatenate([T[:, 1] + dt.dT[:, 1], [N[1] + dt.dN[1]]])
        return D, F

    jt = np.empty((5, 5))
    for k in range(5):
        e = np.zeros(5)
        e[k] = 1.0
        jt[:, k] = (DF(w, wt + e, wx)[0] - DF(w, wt - e, wx)[0]) / 2.0
    s = 1e-6
    rest = (DF(w + s * wt, wt, wx + s * wtx)[0] - DF(w - s * wt, wt, wx - s * wtx)[0]) / (2 * s)
    dxF = (DF(*x_fields(h))[1] - DF(*x_fields(-h))[1]) / (2 * h)
    return np.linalg.solve(jt, -dxF - rest)


def test_manufactured_rhs(params, s0):
    """Semi-discrete w_tt converges at second order to the continuum value."""
    c = DissipationCoeffs(0.8, 0.3, 1.1, 0.4)
    bg = np.concatenate([FluidState.moving(s0, (0.2, 0, 0)).u4 / s0.theta, [s0.psi]])
    amp = np.array([0.02, 0.03, 0.02, 0.01, 0.05])
    bmp = np.array([0.01, -0.02, 0.01, 0.02, -0.03])
    phase = np.array([0.1, 0.7, 1.3, 2.0, 2.9])
    L = 10.0
    k = 2 * np.pi / L

    def fields(x):
        a = k * x + phase
        return bg + amp * np.sin(a), bmp * np.cos(a), amp * k * np.cos(a), -bmp * k * np.sin(a)

    probe = [5, 17, 29]
    errs = []
    for nx in (32, 64, 128):
        grid = Grid1D(nx, L)
        x = grid.x
        w, wt, _, _ = fields(x[:, None])
        cfg = RunConfig(params, c, s0, Perturbation(0.0), nx=nx, length=L, filter=0.0)
        got = semi_discrete_rhs(SolverState(w, wt), cfg)
        err = 0.0
        for j in probe:
            jj = j * nx // 32
            xj = x[jj]
            ref = _oracle_wtt(params, c, *fields(xj), lambda h, xj=xj: fields(xj + h)[:3])
            err = max(err, np.abs(got[jj] - ref).max())
        errs.append(err)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_sound_speed_dispersion(params, s0):
    """Lowest Fourier mode of the linearised scheme oscillates at c_s k_eff.

    Dissipation coefficients are 1e-8, so the slow eigenvalues are those of
    the ideal fluid with ``c_s^2 = gamma p / (rho + p)``. ``k_eff`` is the
    wavenumber seen by the compact face differences.
    """
    eps = 1e-8
    cfg = cfg_for(params, s0, coeffs=DissipationCoeffs(eps, 0.0, eps, eps), perturbation=Perturbation(0.0), nx=16)
    st = initial_state(cfg)
    w0, v0, dx, prm = st.psi, st.psi_t, cfg.grid.dx, cfg.prm
    n = w0.size
    jac = np.zeros((2 * n, 2 * n))
    h = 1e-7
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        e = e.reshape(w0.shape)
        jac[n:, j] = ((kpy.rhs(w0 + e, v0, dx, prm) - kpy.rhs(w0 - e, v0, dx, prm)) / (2 * h)).ravel()
        jac[n:, n + j] = ((kpy.rhs(w0, v0 + e, dx, prm) - kpy.rhs(w0, v0 - e, dx, prm)) / (2 * h)).ravel()
        jac[j, n + j] = 1.0
    lam = np.linalg.eigvals(jac)
    k = 2 * np.pi / cfg.length
    keff = np.sin(k * dx) / dx
    cs = np.sqrt(params.gamma * s0.p / (s0.rho + s0.p))
    nearest = lam[np.argmin(np.abs(lam - 1j * cs * keff))]
    assert abs(nearest.imag / (cs * keff) - 1.0) < 1e-2
    assert abs(nearest.real) < 1e-3 * abs(nearest.imag)


@pytest.mark.skipif(not HAVE_C, reason="compiled backend not built")
def test_backends_agree(params, s0):
    from causalfluid import _kernels as kc

    cfg = cfg_for(params, s0, coeffs=DissipationCoeffs(1, 0.2, 1, 0.1), velocity=(0.3, 0.1, 0.0),
                  perturbation=Perturbation(0.1, "mode", weights=(1, 1, 0.5, 0.3, 1)), nx=64)
    st = initial_state(cfg)
    dx, prm = cfg.grid.dx, cfg.prm
    a = kpy.rhs(st.psi, st.psi_t, dx, prm, 1e-3)
    b = kc.rhs(st.psi, st.psi_t, dx, prm, 1e-3)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()
    assert np.allclose(kpy.l0_matrix(st.psi, prm), kc.l0_matrix(st.psi, prm), atol=1e-13)
    assert np.allclose(kpy.conserved(st.psi, st.psi_t, dx, prm), kc.conserved(st.psi, st.psi_t, dx, prm), atol=1e-13)
    fa = kpy.face_flux_divergence(st.psi, st.psi_t, dx, prm)
    fb = kc.face_flux_divergence(st.psi, st.psi_t, dx, prm)
    assert np.allclose(fa, fb, atol=1e-12)


@pytest.mark.skipif(not HAVE_C, reason="compiled backend not built")
def test_runs_agree_across_backends(params, s0):
    a = run_decay(cfg_for(params, s0, backend="python", t_end=0.5))
    b = run_decay(cfg_for(params, s0, backend="cython", t_end=0.5))
    assert np.allclose(a.final.psi, b.final.psi, atol=1e-13)


def test_backend_env_selection():
    env = dict(os.environ, CAUSALFLUID_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import causalfluid.solver1d as s; print(s.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unknown_backend(params, s0):
    cfg = cfg_for(params, s0, backend="fortran")
    with pytest.raises(ValueError):
        semi_discrete_rhs(initial_state(cfg), cfg)


# ----------------------------------------------------------------------------
# time stepping


def test_conservation(params, s0):
    cfg = cfg_for(params, s0, coeffs=DissipationCoeffs(1, 0.2, 1, 0.1), velocity=(0.2, 0, 0),
                  perturbation=Perturbation(1e-3, "mode", weights=(1, 1, 1, 0.5, 1)), nx=128, t_end=5.0)
    ts = run_decay(cfg)
    for series in (ts.total_e, ts.total_p, ts.total_n):
        arr = np.array(series)
        assert (arr.max() - arr.min()) / abs(arr[0]) < 1e-10


def test_forward_backward_order(params, s0):
    """One RK4 step forward and back: error drops at fifth order in dt."""
    cfg = cfg_for(params, s0, perturbation=Perturbation(1e-1, "mode", weights=(1, 1, 1, 0, 1)))
    st = initial_state(cfg)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        back = step(step(st, cfg, dt), cfg, -dt)
        errs.append(max(np.abs(back.psi - st.psi).max(), np.abs(back.psi_t - st.psi_t).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 4.5), (errs, orders)


def test_self_convergence(params, s0):
    def low_modes(ts, cfg, K=4):
        k = 2 * np.pi * np.arange(K) / cfg.length
        return np.exp(-1j * np.outer(k, cfg.grid.x)) @ ts.final.psi / cfg.nx

    res = []
    for nx in (64, 128, 256):
        cfg = cfg_for(params, s0, nx=nx, t_end=2.0)
        res.append(low_modes(run_decay(cfg), cfg))
    e1 = np.abs(res[0] - res[1]).max()
    e2 = np.abs(res[1] - res[2]).max()
    assert np.log2(e1 / e2) >= 2.0 - 0.1


def test_decay(params, s0):
    cfg = RunConfig(params, COEFFS, s0, Perturbation(1e-3, "mode"), nx=256, t_end=20.0)
    ts = run_decay(cfg)
    assert ts.t[-1] == pytest.approx(20.0)
    assert ts.l2[-1] < ts.l2[0]


def test_decay_resolution_independent(params, s0):
    finals = []
    for nx in (128, 256):
        ts = run_decay(RunConfig(params, COEFFS, s0, Perturbation(1e-3, "mode"), nx=nx, t_end=20.0))
        finals.append((ts.l2[-1], ts.linf[-1]))
    for a, b in zip(*finals):
        assert abs(a - b) / b < 0.05


def test_zero_amplitude(params, s0):
    ts = run_decay(cfg_for(params, s0, perturbation=Perturbation(0.0), t_end=1.0))
    assert all(x == 0.0 for x in ts.l2) and all(x == 0.0 for x in ts.linf)


def test_t_end_zero(params, s0):
    ts = integrate(cfg_for(params, s0, t_end=0.0))
    assert ts.t == [0.0] and len(ts.l2) == 1


def test_solver_error_keeps_last_state(params, s0):
    cfg = cfg_for(params, s0, perturbation=Perturbation(1e-1, "mode"), nx=32)
    st = initial_state(cfg)
    with pytest.raises(SolverError) as info:
        for _ in range(50):
            st = step(st, cfg, dt=5.0)
    assert info.value.last_valid is not None
    check_state(info.value.last_valid.psi)


def test_csv_output(params, s0, tmp_path):
    cfg = cfg_for(params, s0, t_end=0.5, output_stride=2)
    ts = integrate(cfg, snapshots=True)
    ts.write_csv(tmp_path / "a.csv")
    ts.write_snapshots(tmp_path / "s.csv", cfg.grid.x)
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "t,L2,Linf,total_E,total_P,total_N"
    assert len(lines) == len(ts.t) + 1
    snap = (tmp_path / "s.csv").read_text().splitlines()
    assert snap[0] == "t,x,psi0,psi1,psi2,psi3,psi4"
    assert len(snap) == 1 + cfg.nx * len(ts.snapshots)
    e, p, n = totals(ts.final, cfg)
    assert np.isfinite([e, p, n]).all()


# ----------------------------------------------------------------------------
# fronts


def front_cfg(params, s0, factor, weights, lam=100.0, amplitude=1e-5, **kw):
    cs = chi_star(params, s0, 1.0, 0.0, 0.1)
    c = DissipationCoeffs(lam, 0.0, lam * cs * factor, lam * 0.1)
    base = dict(nx=800, length=12.0, t_end=4.5, output_stride=1, filter=0.0)
    base.update(kw)
    return RunConfig(params, c, s0, Perturbation(amplitude, "pulse", width=1.0, weights=weights), **base)


def test_zero_pulse(params, s0):
    res = run_front_speed(front_cfg(params, s0, 1.0, (1, 1, 0, 0, 1), amplitude=0.0))
    assert not res.detected


def test_front_needs_pulse(params, s0):
    with pytest.raises(ConfigError):
        run_front_speed(cfg_for(params, s0))


def test_front_wrap_is_config_error(params, s0):
    with pytest.raises(ConfigError):
        run_front_speed(front_cfg(params, s0, 1.0, (1, 1, 0, 0, 1), nx=200, length=4.0, t_end=4.0))


def test_transverse_front_slower_when_strictly_causal(params, s0):
    sharp = run_front_speed(front_cfg(params, s0, 1.0, (0, 0, 1, 0, 0)))
    strict = run_front_speed(front_cfg(params, s0, 0.5, (0, 0, 1, 0, 0)))
    assert sharp.detected and strict.detected
    assert 0.95 <= sharp.speed <= 1.02
    assert strict.speed < sharp.speed
