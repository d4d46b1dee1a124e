# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-cell kernels for the 1D solver.

Cell-by-cell port of :mod:`causalfluid._kernels_py`; the two are
interchangeable and the test suite checks that they agree.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)
    double cimag(double complex)

cdef double CSTEP = 1e-30
cdef double GD[4]
GD[0] = -1.0
GD[1] = 1.0
GD[2] = 1.0
GD[3] = 1.0


cdef void _fluxes(const double complex* w, const double complex* wt, const double complex* wx,
                  const double* prm, double complex* D, double complex* F) noexcept nogil:
    cdef double m = prm[0], gamma = prm[1], s0 = prm[2]
    cdef double eta = prm[3], zeta = prm[4], chi = prm[5], mu = prm[6]
    cdef double gm1 = gamma - 1.0
    cdef double complex norm = 0, theta, n, p, rho, h, fb, zt1, zt3, sigma, zeta_t, sigma_t
    cdef double complex u[4]
    cdef double complex ul[4]
    cdef double complex d[2][5]
    cdef double complex dth[2]
    cdef double complex du[2][4]
    cdef double complex pi[4][4]
    cdef double complex sym[4][4]
    cdef double complex tmp[4][4]
    cdef double complex shear[4][2]
    cdef double complex acc[4]
    cdef double complex dth_up[4]
    cdef double complex div, u_dth, mdt, mdn, s
    cdef int a, b, c, k

    for a in range(4):
        norm += w[a] * w[a] * GD[a]
    theta = 1.0 / csqrt(-norm)
    n = cexp(w[4] - m / theta - gamma / gm1 + clog(theta) / gm1 + s0)
    p = n * theta
    rho = m * n + p / gm1
    h = m + gamma * theta / gm1
    fb = gm1 * (1.0 - m / h)
    zt1 = -gm1 * (2.0 - gamma + m / h) * chi * theta
    zt3 = gm1 * gm1 * m * m * mu / theta
    sigma = ((4.0 / 3.0) * eta + zeta + zt1 + zt3) / (1.0 - fb)
    zeta_t = zeta + zt1 + fb * sigma + zt3
    sigma_t = (sigma + chi * theta) / h

    for a in range(4):
        u[a] = theta * w[a]
        ul[a] = u[a] * GD[a]
    for c in range(5):
        d[0][c] = wt[c]
        d[1][c] = wx[c]
    for b in range(2):
        s = 0
        for c in range(4):
            s += d[b][c] * ul[c]
        dth[b] = theta * theta * s
        for c in range(4):
            du[b][c] = theta * d[b][c] + dth[b] * u[c] / theta
    div = du[0][0] + du[1][1]

    for a in range(4):
        for b in range(4):
            pi[a][b] = u[a] * u[b]
            sym[a][b] = 0
        pi[a][a] += GD[a]
    # sym = du_low + du_low^T - 2/3 g div, with d_beta nonzero for beta = 0, 1
    for b in range(2):
        for c in range(4):
            sym[b][c] += du[b][c] * GD[c]
            sym[c][b] += du[b][c] * GD[c]
    for a in range(4):
        sym[a][a] -= (2.0 / 3.0) * GD[a] * div
    for a in range(4):
        for c in range(4):
            s = 0
            for b in range(4):
                s += pi[a][b] * sym[b][c]
            tmp[a][c] = s
    for a in range(4):
        for k in range(2):
            s = 0
            for c in range(4):
                s += tmp[a][c] * pi[c][k]
            shear[a][k] = s
    for c in range(4):
        acc[c] = u[0] * du[0][c] + u[1] * du[1][c]
        dth_up[c] = 0
    dth_up[0] = -dth[0]
    dth_up[1] = dth[1]
    u_dth = u[0] * dth[0] + u[1] * dth[1]

    for a in range(4):
        for k in range(2):
            mdt = (eta * shear[a][k] + zeta_t * div * pi[a][k]
                   + sigma * (u[a] * u[k] * div - acc[a] * u[k] - u[a] * acc[k])
                   + chi * (u[a] * dth_up[k] + dth_up[a] * u[k]))
            if a == k:
                mdt -= chi * GD[a] * u_dth
            s = (rho + p) * u[a] * u[k]
            if a == k:
                s += p * GD[a]
            if k == 0:
                D[a] = s - mdt
            else:
                F[a] = s - mdt
    for k in range(2):
        mdn = mu * d[k][4] * GD[k] + sigma_t * (u[k] * div - acc[k])
        if k == 0:
            D[4] = n * u[0] - mdn
        else:
            F[4] = n * u[1] - mdn


cdef void _l0(const double* w, const double* prm, double* L) noexcept nogil:
    cdef double m = prm[0], gamma = prm[1]
    cdef double eta = prm[3], zeta = prm[4], chi = prm[5], mu = prm[6]
    cdef double gm1 = gamma - 1.0
    cdef double norm = 0, theta, h, fb, zt1, zt3, sigma, zeta_t, th2, u0, pi00, b
    cdef double u[4]
    cdef double pi0[4]
    cdef double pic
    cdef int a, c
    for a in range(4):
        norm += w[a] * w[a] * GD[a]
    theta = 1.0 / sqrt(-norm)
    h = m + gamma * theta / gm1
    fb = gm1 * (1.0 - m / h)
    zt1 = -gm1 * (2.0 - gamma + m / h) * chi * theta
    zt3 = gm1 * gm1 * m * m * mu / theta
    sigma = ((4.0 / 3.0) * eta + zeta + zt1 + zt3) / (1.0 - fb)
    zeta_t = zeta + zt1 + fb * sigma + zt3
    th2 = theta * theta
    for a in range(4):
        u[a] = theta * w[a]
    u0 = u[0]
    for a in range(4):
        pi0[a] = u[a] * u0
    pi0[0] += GD[0]
    pi00 = pi0[0]
    for a in range(4):
        for c in range(4):
            pic = u[a] * u[c]
            if a == c:
                pic += GD[a]
            b = (u[a] * u0 * (-chi * th2 * u[c] * u0 + sigma * theta * pi0[c])
                 + pi0[a] * (-chi * th2 * u[c] * u0 + zeta_t * theta * pi0[c])
                 + chi * th2 * (pi0[a] * u0 * u[c] + pi00 * u[a] * u[c])
                 - sigma * theta * (pic * u0 * u0 + pi0[c] * u[a] * u0)
                 + eta * theta * (pic * pi00 + pi0[a] * pi0[c] - (2.0 / 3.0) * pi0[a] * pi0[c]))
            L[5 * a + c] = -b * GD[c]
        L[5 * a + 4] = 0.0
        L[20 + a] = 0.0
    L[24] = -(-mu * u0 * u0 + mu * pi00)


cdef extern from "math.h" nogil:
    double sqrt(double)
    double fabs(double)


cdef int _solve5(double* A, double* x) noexcept nogil:
    """Gaussian elimination with partial pivoting; ``x`` is overwritten."""
    cdef int i, j, k, piv
    cdef double best, f, t
    for k in range(5):
        piv = k
        best = fabs(A[5 * k + k])
        for i in range(k + 1, 5):
            if fabs(A[5 * i + k]) > best:
                best = fabs(A[5 * i + k])
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(5):
                t = A[5 * k + j]
                A[5 * k + j] = A[5 * piv + j]
                A[5 * piv + j] = t
            t = x[k]
            x[k] = x[piv]
            x[piv] = t
        for i in range(k + 1, 5):
            f = A[5 * i + k] / A[5 * k + k]
            for j in range(k, 5):
                A[5 * i + j] -= f * A[5 * k + j]
            x[i] -= f * x[k]
    for k in range(4, -1, -1):
        t = x[k]
        for j in range(k + 1, 5):
            t -= A[5 * k + j] * x[j]
        x[k] = t / A[5 * k + k]
    return 0


def fluxes(w, wt, wx, prm):
    """``(D, F)`` per row, as complex arrays (see the numpy backend)."""
    cdef double complex[:, ::1] W = np.ascontiguousarray(w, dtype=complex)
    cdef double complex[:, ::1] WT = np.ascontiguousarray(wt, dtype=complex)
    cdef double complex[:, ::1] WX = np.ascontiguousarray(wx, dtype=complex)
    cdef double[::1] P = np.ascontiguousarray(prm, dtype=float)
    cdef Py_ssize_t nc = W.shape[0], j
    D = np.empty((nc, 5), dtype=complex)
    F = np.empty((nc, 5), dtype=complex)
    cdef double complex[:, ::1] Dv = D
    cdef double complex[:, ::1] Fv = F
    for j in range(nc):
        _fluxes(&W[j, 0], &WT[j, 0], &WX[j, 0], &P[0], &Dv[j, 0], &Fv[j, 0])
    return D, F


def l0_matrix(w, prm):
    cdef double[:, ::1] W = np.ascontiguousarray(w, dtype=float)
    cdef double[::1] P = np.ascontiguousarray(prm, dtype=float)
    cdef Py_ssize_t nc = W.shape[0], j
    out = np.empty((nc, 5, 5))
    cdef double[:, :, ::1] O = out
    for j in range(nc):
        _l0(&W[j, 0], &P[0], &O[j, 0, 0])
    return out


def rhs(w, v, double dx, prm, double ko=0.0):
    """``w_tt`` for the periodic semi-discrete system."""
    cdef double[:, ::1] W = np.ascontiguousarray(w, dtype=float)
    cdef double[:, ::1] V = np.ascontiguousarray(v, dtype=float)
    cdef double[::1] P = np.ascontiguousarray(prm, dtype=float)
    cdef Py_ssize_t nx = W.shape[0], j, jp, jm, jpp, jmm
    cdef int c, info = 0
    out = np.empty((nx, 5))
    cdef double[:, ::1] O = out
    ff = np.empty((nx, 5))
    cdef double[:, ::1] FF = ff
    cdef double complex a[5]
    cdef double complex b[5]
    cdef double complex e[5]
    cdef double complex Dc[5]
    cdef double complex Fc[5]
    cdef double L[25]
    cdef double r[5]
    with nogil:
        # face fluxes F_{j+1/2}
        for j in range(nx):
            jp = j + 1 if j + 1 < nx else 0
            for c in range(5):
                a[c] = 0.5 * (W[j, c] + W[jp, c])
                b[c] = 0.5 * (V[j, c] + V[jp, c])
                e[c] = (W[jp, c] - W[j, c]) / dx
            _fluxes(a, b, e, &P[0], Dc, Fc)
            for c in range(5):
                FF[j, c] = Fc[c].real
        for j in range(nx):
            jp = j + 1 if j + 1 < nx else 0
            jm = j - 1 if j > 0 else nx - 1
            for c in range(5):
                a[c] = W[j, c] + 1j * CSTEP * V[j, c]
                b[c] = V[j, c]
                e[c] = (W[jp, c] - W[jm, c]) / (2.0 * dx) + 1j * CSTEP * (V[jp, c] - V[jm, c]) / (2.0 * dx)
            _fluxes(a, b, e, &P[0], Dc, Fc)
            for c in range(5):
                r[c] = -(FF[j, c] - FF[jm, c]) / dx - cimag(Dc[c]) / CSTEP
            _l0(&W[j, 0], &P[0], L)
            if _solve5(L, r) != 0:
                info = 1
            if ko != 0.0:
                jpp = jp + 1 if jp + 1 < nx else 0
                jmm = jm - 1 if jm > 0 else nx - 1
                for c in range(5):
                    r[c] -= (ko / dx) * (V[jpp, c] - 4.0 * V[jp, c] + 6.0 * V[j, c] - 4.0 * V[jm, c] + V[jmm, c])
            for c in range(5):
                O[j, c] = r[c]
    if info:
        raise ZeroDivisionError("singular time-coefficient matrix")
    return out


def face_flux_divergence(w, v, double dx, prm):
    wr = np.roll(w, -1, axis=0)
    vr = np.roll(v, -1, axis=0)
    _, F = fluxes(0.5 * (w + wr), 0.5 * (v + vr), (wr - w) / dx, prm)
    F = F.real
    return (F - np.roll(F, 1, axis=0)) / dx


def conserved(w, v, double dx, prm):
    wx = (np.roll(w, -1, axis=0) - np.roll(w, 1, axis=0)) / (2.0 * dx)
    D, _ = fluxes(w, v, wx, prm)
    return D.real
