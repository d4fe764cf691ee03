"""Equation of state, total/relative energy and viscous stress.

All operations are pure and vectorized over numpy arrays; infeasible
states (negative density, or vacuum carrying momentum) are encoded with a
+inf sentinel instead of raising, so ensemble statistics can skip them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .grid import FarField


@dataclass(frozen=True)
class GasLaw:
    """Isentropic pressure law p = a * rho**gamma."""

    a: float
    gamma: float

    def __post_init__(self):
        if not self.a > 0.0:
            raise GeometryError("pressure coefficient a must be > 0")
        if not self.gamma > 1.0:
            raise GeometryError("adiabatic exponent gamma must be > 1")


@dataclass(frozen=True)
class ViscosityPair:
    """Shear and bulk viscosity of the Newtonian stress."""

    mu: float
    lam: float

    def __post_init__(self):
        if self.mu < 0.0 or self.lam < 0.0:
            raise GeometryError("viscosities must be nonnegative")


def pressure(law: GasLaw, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("negative density")
    return law.a * rho**law.gamma


def pressure_potential(law: GasLaw, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("negative density")
    return (law.a / (law.gamma - 1.0)) * rho**law.gamma


def pressure_potential_prime(law: GasLaw, rho):
    rho = np.asarray(rho, dtype=float)
    return (law.a * law.gamma / (law.gamma - 1.0)) * rho ** (law.gamma - 1.0)


def sound_speed(law: GasLaw, rho):
    rho = np.asarray(rho, dtype=float)
    return np.sqrt(law.a * law.gamma * rho ** (law.gamma - 1.0))


def total_energy(law: GasLaw, rho, mx, my):
    """Kinetic + potential energy density, extended-real.

    Returns 0.5*|m|^2/rho + P(rho) for rho > 0, exactly 0 at rest vacuum,
    and +inf for any other state (the l.s.c. convex extension).
    """
    rho = np.asarray(rho, dtype=float)
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    pos = rho > 0.0
    kin = 0.5 * (mx**2 + my**2) / np.where(pos, rho, 1.0)
    val = kin + (law.a / (law.gamma - 1.0)) * np.abs(rho) ** law.gamma
    vacuum = (rho == 0.0) & (mx == 0.0) & (my == 0.0)
    out = np.where(pos, val, np.where(vacuum, 0.0, np.inf))
    return out if out.ndim else float(out)


def relative_energy(law: GasLaw, rho, mx, my, far: FarField):
    """Bregman distance of (rho, m) to the far-field state, direct formula."""
    rho = np.asarray(rho, dtype=float)
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    ux, uy = far.u_inf
    rinf = far.rho_inf
    Pinf = float(pressure_potential(law, rinf))
    dPinf = float(pressure_potential_prime(law, rinf))

    pos = rho > 0.0
    kin = 0.5 * (mx**2 + my**2) / np.where(pos, rho, 1.0)
    val = (
        kin
        - (mx * ux + my * uy)
        + 0.5 * rho * (ux**2 + uy**2)
        + (law.a / (law.gamma - 1.0)) * np.abs(rho) ** law.gamma
        - dPinf * (rho - rinf)
        - Pinf
    )
    vacuum = (rho == 0.0) & (mx == 0.0) & (my == 0.0)
    vac_val = dPinf * rinf - Pinf  # equals p(rho_inf) > 0
    out = np.where(pos, val, np.where(vacuum, vac_val, np.inf))
    return out if out.ndim else float(out)


def relative_energy_bregman(law: GasLaw, rho, mx, my, far: FarField):
    """Same quantity assembled as E - dE(base).(state-base) - E(base).

    Independent route used to cross-check :func:`relative_energy`.
    """
    rho = np.asarray(rho, dtype=float)
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    ux, uy = far.u_inf
    rinf = far.rho_inf
    minf_x, minf_y = rinf * ux, rinf * uy
    E = total_energy(law, rho, mx, my)
    E_base = float(total_energy(law, rinf, minf_x, minf_y))
    # Gradient of E at the base point: d/drho = -0.5|u|^2 + P', d/dm = u.
    g_rho = -0.5 * (ux**2 + uy**2) + float(pressure_potential_prime(law, rinf))
    lin = g_rho * (rho - rinf) + ux * (mx - minf_x) + uy * (my - minf_y)
    return E - lin - E_base


def viscous_stress(visc: ViscosityPair, grad_u: np.ndarray) -> np.ndarray:
    """Newtonian stress S(G) = mu*(G + G^T - tr(G) I) + lam*tr(G) I, d = 2.

    grad_u has shape (..., 2, 2) with grad_u[..., i, j] = d u_i / d x_j.
    """
    G = np.asarray(grad_u, dtype=float)
    if G.shape[-2:] != (2, 2):
        raise ValueError("grad_u must have trailing shape (2, 2)")
    div = G[..., 0, 0] + G[..., 1, 1]
    GT = np.swapaxes(G, -1, -2)
    eye = np.eye(2)
    S = visc.mu * (G + GT - div[..., None, None] * eye)
    S = S + visc.lam * div[..., None, None] * eye
    return S


def stress_dissipation(visc: ViscosityPair, grad_u: np.ndarray) -> np.ndarray:
    """Pointwise S(G):G = mu*(D11^2 + D12^2) + lam*div^2 >= 0 (d = 2)."""
    G = np.asarray(grad_u, dtype=float)
    div = G[..., 0, 0] + G[..., 1, 1]
    d11 = G[..., 0, 0] - G[..., 1, 1]
    d12 = G[..., 0, 1] + G[..., 1, 0]
    return visc.mu * (d11**2 + d12**2) + visc.lam * div**2


# ---------------------------------------------------------------------------
# Coercivity of the relative energy (the tightness workhorse)


@dataclass(frozen=True)
class CoercivityCertificate:
    """Calibrated constant c with c*E_rel >= Phi on the sampled state box.

    Phi is the piecewise coercivity functional: inside the density window
    [rho_inf/2, 2*rho_inf] it is |m - m_inf|^2 + (rho - rho_inf)^2, outside
    it is |m - m_inf|**(2g/(g+1)) + |rho - rho_inf|**g. The component
    constants bound each piece separately (ratio piece / E_rel).
    """

    c: float
    c_m_window: float
    c_m_outside: float
    c_rho_window: float
    c_rho_outside: float
    rho_max: float
    m_max: float
    margin: float
    a: float
    gamma: float
    rho_inf: float
    u_inf: tuple[float, float]


def coercivity_functional(law: GasLaw, rho, mx, my, far: FarField):
    """The lower-bound functional Phi; zero exactly at the far-field state."""
    rho = np.asarray(rho, dtype=float)
    mx = np.asarray(mx, dtype=float)
    my = np.asarray(my, dtype=float)
    minf = far.m_inf
    g = law.gamma
    dm = np.hypot(mx - minf[0], my - minf[1])
    drho = np.abs(rho - far.rho_inf)
    window = (rho >= 0.5 * far.rho_inf) & (rho <= 2.0 * far.rho_inf)
    q = 2.0 * g / (g + 1.0)
    return np.where(window, dm**2 + drho**2, dm**q + drho**g)


def _coercivity_pieces(law, far, rho, mx, my):
    """Component ratios piece/E_rel on a sample; inf-safe."""
    e = relative_energy(law, rho, mx, my, far)
    minf = far.m_inf
    g = law.gamma
    dm = np.hypot(mx - minf[0], my - minf[1])
    drho = np.abs(rho - far.rho_inf)
    window = (rho >= 0.5 * far.rho_inf) & (rho <= 2.0 * far.rho_inf)
    q = 2.0 * g / (g + 1.0)
    ok = np.isfinite(e) & (e > 0.0)

    def ratio(numer, sel):
        sel = sel & ok
        if not np.any(sel):
            return 0.0
        return float(np.max(numer[sel] / e[sel]))

    return {
        "m_window": ratio(dm**2, window),
        "m_outside": ratio(dm**q, ~window),
        "rho_window": ratio(drho**2, window),
        "rho_outside": ratio(drho**g, ~window),
    }


def calibrate_coercivity(
    law: GasLaw,
    far: FarField,
    rho_max: float = 10.0,
    m_max: float = 10.0,
    n_rho: int = 200,
    n_m: int = 200,
    n_angle: int = 200,
    margin: float = 1.05,
) -> CoercivityCertificate:
    """Brute-force sup of Phi/E_rel over a (rho, |m|, angle) lattice.

    The smallest admissible constant on the sample is inflated by the
    safety margin; the certificate records the sampled box.
    """
    rho = np.linspace(0.0, rho_max, n_rho)
    mmag = np.linspace(0.0, m_max, n_m)
    angles = np.linspace(0.0, 2.0 * np.pi, n_angle, endpoint=False)
    minf = far.m_inf

    pieces = {"m_window": 0.0, "m_outside": 0.0, "rho_window": 0.0, "rho_outside": 0.0}
    sup_total = 0.0
    R, M = np.meshgrid(rho, mmag, indexing="ij")
    for th in angles:
        mx = minf[0] + M * np.cos(th)
        my = minf[1] + M * np.sin(th)
        e = relative_energy(law, R, mx, my, far)
        phi = coercivity_functional(law, R, mx, my, far)
        ok = np.isfinite(e) & (e > 0.0)
        if np.any(ok):
            sup_total = max(sup_total, float(np.max(phi[ok] / e[ok])))
        part = _coercivity_pieces(law, far, R, mx, my)
        for k in pieces:
            pieces[k] = max(pieces[k], part[k])
        if far.u_inf[0] == 0.0 and far.u_inf[1] == 0.0:
            break  # isotropic in m around m_inf = 0: one angle suffices
    return CoercivityCertificate(
        c=margin * sup_total,
        c_m_window=margin * pieces["m_window"],
        c_m_outside=margin * pieces["m_outside"],
        c_rho_window=margin * pieces["rho_window"],
        c_rho_outside=margin * pieces["rho_outside"],
        rho_max=rho_max,
        m_max=m_max,
        margin=margin,
        a=law.a,
        gamma=law.gamma,
        rho_inf=far.rho_inf,
        u_inf=tuple(far.u_inf),
    )


def coercivity_gap(
    law: GasLaw, rho, mx, my, far: FarField, cert: CoercivityCertificate
):
    """c*E_rel - Phi; nonnegative on the certified box once calibrated."""
    e = relative_energy(law, rho, mx, my, far)
    phi = coercivity_functional(law, rho, mx, my, far)
    gap = np.where(np.isinf(e), np.inf, cert.c * np.where(np.isinf(e), 0.0, e) - phi)
    return gap if np.ndim(gap) else float(gap)
