"""Vectorised numpy implementation of the 1D solver kernels.

This is the reference backend; the compiled ``_kernels`` extension mirrors
it cell by cell. Parameters are packed as
``prm = (m, gamma, s0, eta, zeta, chi, mu)``.

Conservative form used by the solver, per cell::

    D^a = T^{a0} + Delta T^{a0}     (N for a = 4)
    F^a = T^{a1} + Delta T^{a1}
    dD/dt + dF/dx = 0

with ``D`` and ``F`` functions of ``(w, w_t, w_x)``. ``D`` is linear in
``w_t``; its coefficient matrix ``L0`` multiplies ``w_tt`` and the rest of
``dD/dt`` is taken by a complex step.
"""

from __future__ import annotations

import numpy as np

CSTEP = 1e-30
G = np.array([-1.0, 1.0, 1.0, 1.0])


def _thermo(w, prm):
    m, gamma, s0 = prm[0], prm[1], prm[2]
    gm1 = gamma - 1.0
    wl = w[:, :4] * G
    theta = 1.0 / np.sqrt(-np.sum(w[:, :4] * wl, axis=1))
    n = np.exp(w[:, 4] - m / theta - gamma / gm1 + np.log(theta) / gm1 + s0)
    p = n * theta
    rho = m * n + p / gm1
    h = m + gamma * theta / gm1
    return theta, n, p, rho, h


def _derived(theta, h, prm):
    m, gamma = prm[0], prm[1]
    eta, zeta, chi, mu = prm[3], prm[4], prm[5], prm[6]
    gm1 = gamma - 1.0
    fb = gm1 * (1.0 - m / h)
    zt1 = -gm1 * (2.0 - gamma + m / h) * chi * theta
    zt3 = gm1 * gm1 * m * m * mu / theta
    sigma = ((4.0 / 3.0) * eta + zeta + zt1 + zt3) / (1.0 - fb)
    zeta_t = zeta + zt1 + fb * sigma + zt3
    sigma_t = (sigma + chi * theta) / h
    return sigma, zeta_t, sigma_t


def fluxes(w, wt, wx, prm):
    """``(D, F)`` for every row of ``w``; complex input is supported."""
    eta, chi, mu = prm[3], prm[5], prm[6]
    theta, n, p, rho, h = _thermo(w, prm)
    sigma, zeta_t, sigma_t = _derived(theta, h, prm)
    nc = w.shape[0]
    dtype = np.result_type(w, wt, wx, float)
    u = theta[:, None] * w[:, :4]
    ul = u * G

    # derivatives along x^0 and x^1 only
    d = np.zeros((nc, 4, 5), dtype=dtype)
    d[:, 0] = wt
    d[:, 1] = wx
    dth = theta[:, None] ** 2 * np.einsum("kbc,kc->kb", d[:, :, :4], ul)
    du = theta[:, None, None] * d[:, :, :4] + dth[:, :, None] * u[:, None, :] / theta[:, None, None]
    dpsi = d[:, :, 4]

    gm = np.diag(G)
    pi = gm[None] + u[:, :, None] * u[:, None, :]
    uu = u[:, :, None] * u[:, None, :]
    div = np.einsum("kbb->k", du)
    du_low = du * G[None, None, :]
    sym = du_low + np.swapaxes(du_low, 1, 2) - (2.0 / 3.0) * gm[None] * div[:, None, None]
    shear = np.einsum("kab,kbc,kcd->kad", pi, sym, pi)
    acc = np.einsum("kd,kds->ks", u, du)
    dth_up = dth * G
    u_dth = np.einsum("kb,kb->k", u, dth)

    mdt = (
        eta * shear
        + (zeta_t * div)[:, None, None] * pi
        + sigma[:, None, None] * (uu * div[:, None, None] - acc[:, :, None] * u[:, None, :] - u[:, :, None] * acc[:, None, :])
        + chi * (u[:, :, None] * dth_up[:, None, :] + dth_up[:, :, None] * u[:, None, :] - gm[None] * u_dth[:, None, None])
    )
    mdn = mu * dpsi * G + sigma_t[:, None] * (u * div[:, None] - acc)

    T = (rho + p)[:, None, None] * uu + p[:, None, None] * gm[None]
    N = n[:, None] * u
    D = np.empty((nc, 5), dtype=dtype)
    F = np.empty((nc, 5), dtype=dtype)
    D[:, :4] = T[:, :, 0] - mdt[:, :, 0]
    F[:, :4] = T[:, :, 1] - mdt[:, :, 1]
    D[:, 4] = N[:, 0] - mdn[:, 0]
    F[:, 4] = N[:, 1] - mdn[:, 1]
    return D, F


def l0_matrix(w, prm):
    """``dD/dw_t`` per cell, in closed form."""
    eta, chi, mu = prm[3], prm[5], prm[6]
    theta, n, p, rho, h = _thermo(w, prm)
    sigma, zeta_t, _ = _derived(theta, h, prm)
    u = theta[:, None] * w[:, :4]
    u0 = u[:, 0]
    gm = np.diag(G)
    pi = gm[None] + u[:, :, None] * u[:, None, :]
    pi0 = pi[:, :, 0]
    pi00 = pi[:, 0, 0]
    th = theta[:, None, None]
    th2 = th**2
    ua = u[:, :, None]
    uc = u[:, None, :]
    # B^{a0c0} from the second-order coefficient tensor
    b = (
        (ua * u0[:, None, None]) * (-chi * th2 * uc * u0[:, None, None] + sigma[:, None, None] * th * pi0[:, None, :])
        + pi0[:, :, None] * (-chi * th2 * uc * u0[:, None, None] + zeta_t[:, None, None] * th * pi0[:, None, :])
        + chi * th2 * (pi0[:, :, None] * u0[:, None, None] * uc + pi00[:, None, None] * ua * uc)
        - sigma[:, None, None] * th * (pi * (u0**2)[:, None, None] + pi0[:, None, :] * ua * u0[:, None, None])
        + eta * th * (pi * pi00[:, None, None] + pi0[:, :, None] * pi0[:, None, :] - (2.0 / 3.0) * pi0[:, :, None] * pi0[:, None, :])
    )
    out = np.zeros((w.shape[0], 5, 5))
    out[:, :4, :4] = -b * G[None, None, :]
    out[:, 4, 4] = -(-mu * u0**2 + mu * pi00)
    return out


def _dx(a, dx):
    return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * dx)


def fourth_difference(a):
    return (
        np.roll(a, -2, axis=0) - 4.0 * np.roll(a, -1, axis=0) + 6.0 * a
        - 4.0 * np.roll(a, 1, axis=0) + np.roll(a, 2, axis=0)
    )


def face_flux_divergence(w, v, dx, prm):
    wr = np.roll(w, -1, axis=0)
    vr = np.roll(v, -1, axis=0)
    _, F = fluxes(0.5 * (w + wr), 0.5 * (v + vr), (wr - w) / dx, prm)
    return (F - np.roll(F, 1, axis=0)) / dx


def rhs(w, v, dx, prm, ko=0.0):
    """``w_tt`` for the periodic semi-discrete system."""
    div_f = face_flux_divergence(w, v, dx, prm)
    wx = _dx(w, dx)
    vx = _dx(v, dx)
    Dc, _ = fluxes(w + 1j * CSTEP * v, v.astype(complex), wx + 1j * CSTEP * vx, prm)
    rest = Dc.imag / CSTEP
    rhs_vec = -div_f - rest
    wtt = np.linalg.solve(l0_matrix(w, prm), rhs_vec[:, :, None])[:, :, 0]
    if ko:
        wtt -= (ko / dx) * fourth_difference(v)
    return wtt


def conserved(w, v, dx, prm):
    """Cell values of ``D`` with the same centred ``w_x`` as :func:`rhs`."""
    D, _ = fluxes(w, v, _dx(w, dx), prm)
    return D
