"""Vectorized numpy implementation of the flux and gradient kernels.

This is the fallback path; `_kernels_numba` implements the same
contracts with explicit loops. Both must produce matching results
(same per-element operation order), which the test suite checks.

Face layout: x-faces Fx[fi, fj] sit between array columns fi and fi+1,
fi = 0..nx, at interior row j = fj+1. y-faces Fy[fi, fj] sit between
array rows fj and fj+1 at interior column i = fi+1. Solid neighbours
enter every face as mirror states (density copied, momentum negated),
so reconstructed face velocity at the obstacle is exactly zero.
"""

import numpy as np

SOLID = 1

RUSANOV = 0
HLL = 1


def _minmod(a, b):
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _slopes(q, mask, axis):
    """Limited per-cell slopes along one axis; zero at ghosts and next to
    solid cells, so reconstruction never reaches across the obstacle."""
    s = np.zeros_like(q)
    if axis == 0:
        d_m = q[1:-1, :] - q[:-2, :]
        d_p = q[2:, :] - q[1:-1, :]
        ok = (mask[1:-1, :] == 0) & (mask[:-2, :] != SOLID) & (mask[2:, :] != SOLID)
        s[1:-1, :] = np.where(ok, _minmod(d_m, d_p), 0.0)
    else:
        d_m = q[:, 1:-1] - q[:, :-2]
        d_p = q[:, 2:] - q[:, 1:-1]
        ok = (mask[:, 1:-1] == 0) & (mask[:, :-2] != SOLID) & (mask[:, 2:] != SOLID)
        s[:, 1:-1] = np.where(ok, _minmod(d_m, d_p), 0.0)
    return s


def face_fluxes(rho, mx, my, ux, uy, mask, a, gamma, mu, lam, eps, dx, dy, floor,
                flux_id, recon_id=0):
    """Convective + viscous fluxes on all faces adjacent to interior cells.

    recon_id 1 enables minmod MUSCL reconstruction away from the
    obstacle; faces touching solid cells always use the first-order
    mirror states. Returns (Fx_mass, Fx_mx, Fx_my, Fy_mass, Fy_mx,
    Fy_my, smax) where smax is the largest acoustic face speed seen
    next to a fluid cell.
    """
    nx = rho.shape[0] - 2
    ny = rho.shape[1] - 2

    # ---- x-faces ----------------------------------------------------
    L = (slice(0, nx + 1), slice(1, ny + 1))
    R = (slice(1, nx + 2), slice(1, ny + 1))
    solidL = mask[L] == SOLID
    solidR = mask[R] == SOLID

    rhoL = np.where(solidL, rho[R], rho[L])
    mxL = np.where(solidL, -mx[R], mx[L])
    myL = np.where(solidL, -my[R], my[L])
    rhoR = np.where(solidR, rho[L], rho[R])
    mxR = np.where(solidR, -mx[L], mx[R])
    myR = np.where(solidR, -my[L], my[R])
    if recon_id == 1:
        plain = ~(solidL | solidR)
        s_rho = _slopes(rho, mask, 0)
        s_mx = _slopes(mx, mask, 0)
        s_my = _slopes(my, mask, 0)
        rhoL = np.where(plain, rhoL + 0.5 * s_rho[L], rhoL)
        mxL = np.where(plain, mxL + 0.5 * s_mx[L], mxL)
        myL = np.where(plain, myL + 0.5 * s_my[L], myL)
        rhoR = np.where(plain, rhoR - 0.5 * s_rho[R], rhoR)
        mxR = np.where(plain, mxR - 0.5 * s_mx[R], mxR)
        myR = np.where(plain, myR - 0.5 * s_my[R], myR)

    Fx_mass, Fx_mx, Fx_my, sx = _riemann_flux(
        rhoL, mxL, myL, rhoR, mxR, myR, a, gamma, floor, flux_id, normal=0
    )

    uxLn = np.where(solidL, -ux[R], ux[L])
    uyLn = np.where(solidL, -uy[R], uy[L])
    uxRn = np.where(solidR, -ux[L], ux[R])
    uyRn = np.where(solidR, -uy[L], uy[R])
    dudx = (uxRn - uxLn) / dx
    dvdx = (uyRn - uyLn) / dx
    T1 = (slice(0, nx + 1), slice(2, ny + 2))
    B1 = (slice(0, nx + 1), slice(0, ny))
    T2 = (slice(1, nx + 2), slice(2, ny + 2))
    B2 = (slice(1, nx + 2), slice(0, ny))
    dudy = (ux[T1] - ux[B1] + ux[T2] - ux[B2]) / (4.0 * dy)
    dvdy = (uy[T1] - uy[B1] + uy[T2] - uy[B2]) / (4.0 * dy)
    div = dudx + dvdy
    Sxx = mu * (dudx - dvdy) + lam * div
    Sxy = mu * (dvdx + dudy)
    Fx_mx = Fx_mx - eps * Sxx
    Fx_my = Fx_my - eps * Sxy

    # ---- y-faces ----------------------------------------------------
    B = (slice(1, nx + 1), slice(0, ny + 1))
    T = (slice(1, nx + 1), slice(1, ny + 2))
    solidB = mask[B] == SOLID
    solidT = mask[T] == SOLID

    rhoB = np.where(solidB, rho[T], rho[B])
    mxB = np.where(solidB, -mx[T], mx[B])
    myB = np.where(solidB, -my[T], my[B])
    rhoT = np.where(solidT, rho[B], rho[T])
    mxT = np.where(solidT, -mx[B], mx[T])
    myT = np.where(solidT, -my[B], my[T])
    if recon_id == 1:
        plain = ~(solidB | solidT)
        s_rho = _slopes(rho, mask, 1)
        s_mx = _slopes(mx, mask, 1)
        s_my = _slopes(my, mask, 1)
        rhoB = np.where(plain, rhoB + 0.5 * s_rho[B], rhoB)
        mxB = np.where(plain, mxB + 0.5 * s_mx[B], mxB)
        myB = np.where(plain, myB + 0.5 * s_my[B], myB)
        rhoT = np.where(plain, rhoT - 0.5 * s_rho[T], rhoT)
        mxT = np.where(plain, mxT - 0.5 * s_mx[T], mxT)
        myT = np.where(plain, myT - 0.5 * s_my[T], myT)

    Fy_mass, Fy_mx, Fy_my, sy = _riemann_flux(
        rhoB, mxB, myB, rhoT, mxT, myT, a, gamma, floor, flux_id, normal=1
    )

    uxBn = np.where(solidB, -ux[T], ux[B])
    uyBn = np.where(solidB, -uy[T], uy[B])
    uxTn = np.where(solidT, -ux[B], ux[T])
    uyTn = np.where(solidT, -uy[B], uy[T])
    dudy_n = (uxTn - uxBn) / dy
    dvdy_n = (uyTn - uyBn) / dy
    E1 = (slice(2, nx + 2), slice(0, ny + 1))
    W1 = (slice(0, nx), slice(0, ny + 1))
    E2 = (slice(2, nx + 2), slice(1, ny + 2))
    W2 = (slice(0, nx), slice(1, ny + 2))
    dudx_f = (ux[E1] - ux[W1] + ux[E2] - ux[W2]) / (4.0 * dx)
    dvdx_f = (uy[E1] - uy[W1] + uy[E2] - uy[W2]) / (4.0 * dx)
    div = dudx_f + dvdy_n
    Syy = mu * (dvdy_n - dudx_f) + lam * div
    Syx = mu * (dvdx_f + dudy_n)
    Fy_mx = Fy_mx - eps * Syx
    Fy_my = Fy_my - eps * Syy

    # ---- max face speed next to fluid -------------------------------
    fluidx = (mask[L] == 0) | (mask[R] == 0)
    fluidy = (mask[B] == 0) | (mask[T] == 0)
    smax = 0.0
    if np.any(fluidx):
        smax = max(smax, float(np.max(sx[fluidx])))
    if np.any(fluidy):
        smax = max(smax, float(np.max(sy[fluidy])))

    return Fx_mass, Fx_mx, Fx_my, Fy_mass, Fy_mx, Fy_my, smax


def _riemann_flux(rhoL, mxL, myL, rhoR, mxR, myR, a, gamma, floor, flux_id, normal):
    """Rusanov or HLL flux for the isentropic system, one face batch."""
    rL = np.maximum(rhoL, floor)
    rR = np.maximum(rhoR, floor)
    if normal == 0:
        unL = mxL / rL
        unR = mxR / rR
    else:
        unL = myL / rL
        unR = myR / rR
    pL = a * rhoL**gamma
    pR = a * rhoR**gamma
    cL = np.sqrt(a * gamma * rhoL ** (gamma - 1.0))
    cR = np.sqrt(a * gamma * rhoR ** (gamma - 1.0))

    if normal == 0:
        FL_mass = mxL
        FL_mx = mxL * unL + pL
        FL_my = myL * unL
        FR_mass = mxR
        FR_mx = mxR * unR + pR
        FR_my = myR * unR
    else:
        FL_mass = myL
        FL_mx = mxL * unL
        FL_my = myL * unL + pL
        FR_mass = myR
        FR_mx = mxR * unR
        FR_my = myR * unR + pR

    if flux_id == RUSANOV:
        s = np.maximum(np.abs(unL) + cL, np.abs(unR) + cR)
        F_mass = 0.5 * (FL_mass + FR_mass) - 0.5 * s * (rhoR - rhoL)
        F_mx = 0.5 * (FL_mx + FR_mx) - 0.5 * s * (mxR - mxL)
        F_my = 0.5 * (FL_my + FR_my) - 0.5 * s * (myR - myL)
        return F_mass, F_mx, F_my, s

    sLw = np.minimum(unL - cL, unR - cR)
    sRw = np.maximum(unL + cL, unR + cR)
    denom = np.where(sRw > sLw, sRw - sLw, 1.0)

    def pick(FL, FR, UL, UR):
        mid = (sRw * FL - sLw * FR + sLw * sRw * (UR - UL)) / denom
        return np.where(sLw >= 0.0, FL, np.where(sRw <= 0.0, FR, mid))

    F_mass = pick(FL_mass, FR_mass, rhoL, rhoR)
    F_mx = pick(FL_mx, FR_mx, mxL, mxR)
    F_my = pick(FL_my, FR_my, myL, myR)
    s = np.maximum(np.abs(sLw), np.abs(sRw))
    return F_mass, F_mx, F_my, s


def cell_gradients(ux, uy, mask, dx, dy):
    """Cell-centered velocity gradient on interior cells, mirror at walls.

    Returns (G11, G12, G21, G22) with G[i][j] = d u_i / d x_j, shape
    (nx, ny), zero at non-fluid cells.
    """
    nx = ux.shape[0] - 2
    ny = ux.shape[1] - 2
    C = (slice(1, nx + 1), slice(1, ny + 1))
    E = (slice(2, nx + 2), slice(1, ny + 1))
    W = (slice(0, nx), slice(1, ny + 1))
    N = (slice(1, nx + 1), slice(2, ny + 2))
    S = (slice(1, nx + 1), slice(0, ny))

    fluid = mask[C] == 0
    solidE = mask[E] == SOLID
    solidW = mask[W] == SOLID
    solidN = mask[N] == SOLID
    solidS = mask[S] == SOLID

    uxE = np.where(solidE, -ux[C], ux[E])
    uxW = np.where(solidW, -ux[C], ux[W])
    uxN = np.where(solidN, -ux[C], ux[N])
    uxS = np.where(solidS, -ux[C], ux[S])
    uyE = np.where(solidE, -uy[C], uy[E])
    uyW = np.where(solidW, -uy[C], uy[W])
    uyN = np.where(solidN, -uy[C], uy[N])
    uyS = np.where(solidS, -uy[C], uy[S])

    G11 = np.where(fluid, (uxE - uxW) / (2.0 * dx), 0.0)
    G12 = np.where(fluid, (uxN - uxS) / (2.0 * dy), 0.0)
    G21 = np.where(fluid, (uyE - uyW) / (2.0 * dx), 0.0)
    G22 = np.where(fluid, (uyN - uyS) / (2.0 * dy), 0.0)
    return G11, G12, G21, G22
