"""Numba njit implementation of the flux and gradient kernels.

Loop bodies replicate `_kernels_numpy` expression by expression so the
two paths agree to rounding; the benchmark in benchmarks/ compares
their throughput.
"""

import numpy as np
from numba import njit

SOLID = 1

RUSANOV = 0
HLL = 1


@njit(cache=True, nogil=True)
def _minmod1(a, b):
    if a * b > 0.0:
        return a if abs(a) < abs(b) else b
    return 0.0


@njit(cache=True, nogil=True)
def _hll_pick(sL, sR, FL, FR, UL, UR):
    if sL >= 0.0:
        return FL
    if sR <= 0.0:
        return FR
    return (sR * FL - sL * FR + sL * sR * (UR - UL)) / (sR - sL)


@njit(cache=True, nogil=True)
def face_fluxes(rho, mx, my, ux, uy, mask, a, gamma, mu, lam, eps, dx, dy, floor,
                flux_id, recon_id=0):
    nx = rho.shape[0] - 2
    ny = rho.shape[1] - 2
    Fx_mass = np.zeros((nx + 1, ny))
    Fx_mx = np.zeros((nx + 1, ny))
    Fx_my = np.zeros((nx + 1, ny))
    Fy_mass = np.zeros((nx, ny + 1))
    Fy_mx = np.zeros((nx, ny + 1))
    Fy_my = np.zeros((nx, ny + 1))
    smax = 0.0

    for fi in range(nx + 1):
        for fj in range(ny):
            i = fi  # left cell column
            j = fj + 1
            solidL = mask[i, j] == SOLID
            solidR = mask[i + 1, j] == SOLID

            if solidL:
                rhoL = rho[i + 1, j]
                mxL = -mx[i + 1, j]
                myL = -my[i + 1, j]
            else:
                rhoL = rho[i, j]
                mxL = mx[i, j]
                myL = my[i, j]
            if solidR:
                rhoR = rho[i, j]
                mxR = -mx[i, j]
                myR = -my[i, j]
            else:
                rhoR = rho[i + 1, j]
                mxR = mx[i + 1, j]
                myR = my[i + 1, j]
            if recon_id == 1 and not solidL and not solidR:
                if (mask[i, j] == 0 and mask[i - 1, j] != SOLID
                        and mask[i + 1, j] != SOLID):
                    rhoL = rhoL + 0.5 * _minmod1(rho[i, j] - rho[i - 1, j],
                                                 rho[i + 1, j] - rho[i, j])
                    mxL = mxL + 0.5 * _minmod1(mx[i, j] - mx[i - 1, j],
                                               mx[i + 1, j] - mx[i, j])
                    myL = myL + 0.5 * _minmod1(my[i, j] - my[i - 1, j],
                                               my[i + 1, j] - my[i, j])
                if (mask[i + 1, j] == 0 and mask[i, j] != SOLID
                        and mask[i + 2, j] != SOLID):
                    rhoR = rhoR - 0.5 * _minmod1(rho[i + 1, j] - rho[i, j],
                                                 rho[i + 2, j] - rho[i + 1, j])
                    mxR = mxR - 0.5 * _minmod1(mx[i + 1, j] - mx[i, j],
                                               mx[i + 2, j] - mx[i + 1, j])
                    myR = myR - 0.5 * _minmod1(my[i + 1, j] - my[i, j],
                                               my[i + 2, j] - my[i + 1, j])

            rL = max(rhoL, floor)
            rR = max(rhoR, floor)
            unL = mxL / rL
            unR = mxR / rR
            pL = a * rhoL**gamma
            pR = a * rhoR**gamma
            cL = np.sqrt(a * gamma * rhoL ** (gamma - 1.0))
            cR = np.sqrt(a * gamma * rhoR ** (gamma - 1.0))
            FL_mass = mxL
            FL_mx = mxL * unL + pL
            FL_my = myL * unL
            FR_mass = mxR
            FR_mx = mxR * unR + pR
            FR_my = myR * unR

            if flux_id == RUSANOV:
                s = max(abs(unL) + cL, abs(unR) + cR)
                fm = 0.5 * (FL_mass + FR_mass) - 0.5 * s * (rhoR - rhoL)
                f1 = 0.5 * (FL_mx + FR_mx) - 0.5 * s * (mxR - mxL)
                f2 = 0.5 * (FL_my + FR_my) - 0.5 * s * (myR - myL)
            else:
                sLw = min(unL - cL, unR - cR)
                sRw = max(unL + cL, unR + cR)
                fm = _hll_pick(sLw, sRw, FL_mass, FR_mass, rhoL, rhoR)
                f1 = _hll_pick(sLw, sRw, FL_mx, FR_mx, mxL, mxR)
                f2 = _hll_pick(sLw, sRw, FL_my, FR_my, myL, myR)
                s = max(abs(sLw), abs(sRw))

            if solidL:
                uxLn = -ux[i + 1, j]
                uyLn = -uy[i + 1, j]
            else:
                uxLn = ux[i, j]
                uyLn = uy[i, j]
            if solidR:
                uxRn = -ux[i, j]
                uyRn = -uy[i, j]
            else:
                uxRn = ux[i + 1, j]
                uyRn = uy[i + 1, j]
            dudx = (uxRn - uxLn) / dx
            dvdx = (uyRn - uyLn) / dx
            dudy = (ux[i, j + 1] - ux[i, j - 1] + ux[i + 1, j + 1] - ux[i + 1, j - 1]) / (4.0 * dy)
            dvdy = (uy[i, j + 1] - uy[i, j - 1] + uy[i + 1, j + 1] - uy[i + 1, j - 1]) / (4.0 * dy)
            div = dudx + dvdy
            Sxx = mu * (dudx - dvdy) + lam * div
            Sxy = mu * (dvdx + dudy)

            Fx_mass[fi, fj] = fm
            Fx_mx[fi, fj] = f1 - eps * Sxx
            Fx_my[fi, fj] = f2 - eps * Sxy
            if mask[i, j] == 0 or mask[i + 1, j] == 0:
                if s > smax:
                    smax = s

    for fi in range(nx):
        for fj in range(ny + 1):
            i = fi + 1
            j = fj  # bottom cell row
            solidB = mask[i, j] == SOLID
            solidT = mask[i, j + 1] == SOLID

            if solidB:
                rhoB = rho[i, j + 1]
                mxB = -mx[i, j + 1]
                myB = -my[i, j + 1]
            else:
                rhoB = rho[i, j]
                mxB = mx[i, j]
                myB = my[i, j]
            if solidT:
                rhoT = rho[i, j]
                mxT = -mx[i, j]
                myT = -my[i, j]
            else:
                rhoT = rho[i, j + 1]
                mxT = mx[i, j + 1]
                myT = my[i, j + 1]
            if recon_id == 1 and not solidB and not solidT:
                if (mask[i, j] == 0 and mask[i, j - 1] != SOLID
                        and mask[i, j + 1] != SOLID):
                    rhoB = rhoB + 0.5 * _minmod1(rho[i, j] - rho[i, j - 1],
                                                 rho[i, j + 1] - rho[i, j])
                    mxB = mxB + 0.5 * _minmod1(mx[i, j] - mx[i, j - 1],
                                               mx[i, j + 1] - mx[i, j])
                    myB = myB + 0.5 * _minmod1(my[i, j] - my[i, j - 1],
                                               my[i, j + 1] - my[i, j])
                if (mask[i, j + 1] == 0 and mask[i, j] != SOLID
                        and mask[i, j + 2] != SOLID):
                    rhoT = rhoT - 0.5 * _minmod1(rho[i, j + 1] - rho[i, j],
                                                 rho[i, j + 2] - rho[i, j + 1])
                    mxT = mxT - 0.5 * _minmod1(mx[i, j + 1] - mx[i, j],
                                               mx[i, j + 2] - mx[i, j + 1])
                    myT = myT - 0.5 * _minmod1(my[i, j + 1] - my[i, j],
                                               my[i, j + 2] - my[i, j + 1])

            rB = max(rhoB, floor)
            rT = max(rhoT, floor)
            unB = myB / rB
            unT = myT / rT
            pB = a * rhoB**gamma
            pT = a * rhoT**gamma
            cB = np.sqrt(a * gamma * rhoB ** (gamma - 1.0))
            cT = np.sqrt(a * gamma * rhoT ** (gamma - 1.0))
            FB_mass = myB
            FB_mx = mxB * unB
            FB_my = myB * unB + pB
            FT_mass = myT
            FT_mx = mxT * unT
            FT_my = myT * unT + pT

            if flux_id == RUSANOV:
                s = max(abs(unB) + cB, abs(unT) + cT)
                fm = 0.5 * (FB_mass + FT_mass) - 0.5 * s * (rhoT - rhoB)
                f1 = 0.5 * (FB_mx + FT_mx) - 0.5 * s * (mxT - mxB)
                f2 = 0.5 * (FB_my + FT_my) - 0.5 * s * (myT - myB)
            else:
                sLw = min(unB - cB, unT - cT)
                sRw = max(unB + cB, unT + cT)
                fm = _hll_pick(sLw, sRw, FB_mass, FT_mass, rhoB, rhoT)
                f1 = _hll_pick(sLw, sRw, FB_mx, FT_mx, mxB, mxT)
                f2 = _hll_pick(sLw, sRw, FB_my, FT_my, myB, myT)
                s = max(abs(sLw), abs(sRw))

            if solidB:
                uxBn = -ux[i, j + 1]
                uyBn = -uy[i, j + 1]
            else:
                uxBn = ux[i, j]
                uyBn = uy[i, j]
            if solidT:
                uxTn = -ux[i, j]
                uyTn = -uy[i, j]
            else:
                uxTn = ux[i, j + 1]
                uyTn = uy[i, j + 1]
            dudy_n = (uxTn - uxBn) / dy
            dvdy_n = (uyTn - uyBn) / dy
            dudx_f = (ux[i + 1, j] - ux[i - 1, j] + ux[i + 1, j + 1] - ux[i - 1, j + 1]) / (4.0 * dx)
            dvdx_f = (uy[i + 1, j] - uy[i - 1, j] + uy[i + 1, j + 1] - uy[i - 1, j + 1]) / (4.0 * dx)
            div = dudx_f + dvdy_n
            Syy = mu * (dvdy_n - dudx_f) + lam * div
            Syx = mu * (dvdx_f + dudy_n)

            Fy_mass[fi, fj] = fm
            Fy_mx[fi, fj] = f1 - eps * Syx
            Fy_my[fi, fj] = f2 - eps * Syy
            if mask[i, j] == 0 or mask[i, j + 1] == 0:
                if s > smax:
                    smax = s

    return Fx_mass, Fx_mx, Fx_my, Fy_mass, Fy_mx, Fy_my, smax


@njit(cache=True, nogil=True)
def cell_gradients(ux, uy, mask, dx, dy):
    nx = ux.shape[0] - 2
    ny = ux.shape[1] - 2
    G11 = np.zeros((nx, ny))
    G12 = np.zeros((nx, ny))
    G21 = np.zeros((nx, ny))
    G22 = np.zeros((nx, ny))
    for ii in range(nx):
        for jj in range(ny):
            i = ii + 1
            j = jj + 1
            if mask[i, j] != 0:
                continue
            uxc = ux[i, j]
            uyc = uy[i, j]
            uxE = -uxc if mask[i + 1, j] == SOLID else ux[i + 1, j]
            uxW = -uxc if mask[i - 1, j] == SOLID else ux[i - 1, j]
            uxN = -uxc if mask[i, j + 1] == SOLID else ux[i, j + 1]
            uxS = -uxc if mask[i, j - 1] == SOLID else ux[i, j - 1]
            uyE = -uyc if mask[i + 1, j] == SOLID else uy[i + 1, j]
            uyW = -uyc if mask[i - 1, j] == SOLID else uy[i - 1, j]
            uyN = -uyc if mask[i, j + 1] == SOLID else uy[i, j + 1]
            uyS = -uyc if mask[i, j - 1] == SOLID else uy[i, j - 1]
            G11[ii, jj] = (uxE - uxW) / (2.0 * dx)
            G12[ii, jj] = (uxN - uxS) / (2.0 * dy)
            G21[ii, jj] = (uyE - uyW) / (2.0 * dx)
            G22[ii, jj] = (uyN - uyS) / (2.0 * dy)
    return G11, G12, G21, G22
