"""Reynolds defect tensor fields and the convex-obstacle diagnostics.

The defect is the Jensen gap of the convex flux map
(rho, m) -> m x m / rho + p(rho) I between ensemble averaging and the
averaged state; it is symmetric by construction and positive
semi-definite up to rounding. Everything here is pure post-processing
over immutable ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryError
from .grid import CompactRegion, FarField, Grid, annulus_cells
from .quadrature import trapezoid_weights
from .stats import CesaroField, Ensemble, cesaro_average, energy_budget
from .solver import velocity_gradient
from .testfns import ConvexProfile, ConvexProfileGradient, TimeWeight, grid_points
from .thermo import (
    CoercivityCertificate,
    GasLaw,
    calibrate_coercivity,
    relative_energy,
    viscous_stress,
)


@dataclass
class DefectField:
    """Symmetric 2x2 tensor field per snapshot time on interior cells."""

    times: np.ndarray
    r11: np.ndarray  # (T, nx, ny)
    r12: np.ndarray
    r22: np.ndarray
    n_used: int = 0
    ensemble_id: str = ""

    @property
    def trace(self) -> np.ndarray:
        return self.r11 + self.r22

    def min_eigenvalue(self) -> np.ndarray:
        half = 0.5 * (self.r11 + self.r22)
        rad = np.sqrt((0.5 * (self.r11 - self.r22)) ** 2 + self.r12**2)
        return half - rad

    def contract(self, grad_phi: np.ndarray) -> np.ndarray:
        """R : G per cell for G with shape (nx, ny, 2, 2)."""
        return (
            self.r11 * grad_phi[..., 0, 0]
            + self.r12 * (grad_phi[..., 0, 1] + grad_phi[..., 1, 0])
            + self.r22 * grad_phi[..., 1, 1]
        )


def reynolds_defect(cesaro: CesaroField, law: GasLaw) -> DefectField:
    """Averaged flux tensor minus the flux tensor of the averaged state."""
    pos = cesaro.rho > 0.0
    rs = np.where(pos, cesaro.rho, 1.0)
    bar_xx = np.where(pos, cesaro.mx * cesaro.mx / rs, 0.0)
    bar_xy = np.where(pos, cesaro.mx * cesaro.my / rs, 0.0)
    bar_yy = np.where(pos, cesaro.my * cesaro.my / rs, 0.0)
    p_bar = law.a * cesaro.rho**law.gamma
    return DefectField(
        times=cesaro.times.copy(),
        r11=cesaro.kin_xx + cesaro.pressure - (bar_xx + p_bar),
        r12=cesaro.kin_xy - bar_xy,
        r22=cesaro.kin_yy + cesaro.pressure - (bar_yy + p_bar),
        n_used=cesaro.n_used,
        ensemble_id=cesaro.ensemble_id,
    )


@dataclass
class PsdReport:
    passed: bool
    worst_margin: float  # min over cells of (lambda_min + tol*(1+trace))
    min_eigenvalue: float
    max_trace: float
    tol: float


def psd_check(defect: DefectField, tol: float = 1e-10) -> PsdReport:
    """Per-cell minimum eigenvalue against the trace-relative tolerance."""
    lam = defect.min_eigenvalue()
    margin = lam + tol * (1.0 + defect.trace)
    return PsdReport(
        passed=bool(np.all(margin >= 0.0)),
        worst_margin=float(np.min(margin)),
        min_eigenvalue=float(np.min(lam)),
        max_trace=float(np.max(defect.trace)),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Trace / energy comparison


@dataclass
class SandwichReport:
    c1: float
    c2: float
    min_slack_upper: float  # min of C1*gap_tr - gap_E
    min_slack_lower: float  # min of C2*gap_E - gap_tr
    min_gap_kinetic: float
    min_gap_potential: float

    @property
    def passed(self) -> bool:
        return self.min_slack_upper >= -1e-12 and self.min_slack_lower >= -1e-12


def trace_energy_sandwich(ens: Ensemble, upto: int) -> SandwichReport:
    """Pointwise two-sided comparison of energy and trace Jensen gaps.

    gap(f) = (1/N) sum f(s_n) - f(s_bar) per cell; the energy gap
    gap(K/2 + P) and the trace gap gap(K + d p) control each other with
    the printed constants C1 = max(1/2, 1/((g-1)d)), C2 = max(2, (g-1)d).
    """
    law = ens.law
    g = law.gamma
    d = 2.0
    mean_K = None
    mean_P = None
    mean_rho = None
    mean_mx = None
    mean_my = None
    for k in range(upto):
        _, rho, mx, my = ens.members[k].field_arrays()
        pos = rho > 0.0
        rs = np.where(pos, rho, 1.0)
        K = np.where(pos, (mx * mx + my * my) / rs, 0.0)
        P = (law.a / (g - 1.0)) * rho**g
        if mean_K is None:
            mean_K = K.copy()
            mean_P = P.copy()
            mean_rho = rho.astype(float).copy()
            mean_mx = mx.astype(float).copy()
            mean_my = my.astype(float).copy()
        else:
            mean_K += (K - mean_K) / (k + 1)
            mean_P += (P - mean_P) / (k + 1)
            mean_rho += (rho - mean_rho) / (k + 1)
            mean_mx += (mx - mean_mx) / (k + 1)
            mean_my += (my - mean_my) / (k + 1)
    pos = mean_rho > 0.0
    rs = np.where(pos, mean_rho, 1.0)
    K_bar = np.where(pos, (mean_mx**2 + mean_my**2) / rs, 0.0)
    P_bar = (law.a / (g - 1.0)) * mean_rho**g
    gap_K = mean_K - K_bar
    gap_P = mean_P - P_bar
    gap_E = 0.5 * gap_K + gap_P
    gap_tr = gap_K + d * (g - 1.0) * gap_P
    c1 = max(0.5, 1.0 / ((g - 1.0) * d))
    c2 = max(2.0, (g - 1.0) * d)
    return SandwichReport(
        c1=c1,
        c2=c2,
        min_slack_upper=float(np.min(c1 * gap_tr - gap_E)),
        min_slack_lower=float(np.min(c2 * gap_E - gap_tr)),
        min_gap_kinetic=float(np.min(gap_K)),
        min_gap_potential=float(np.min(gap_P)),
    )


# ---------------------------------------------------------------------------
# Convex pairing of Proposition-style test fields


@dataclass
class ConvexPairingResult:
    L: float
    pairing: float
    hessian_term: float
    cutoff_term: float
    trace_lower_bound: float

    @property
    def hessian_slack(self) -> float:
        return self.hessian_term - self.trace_lower_bound


def convex_pairing(
    defect: DefectField,
    grid: Grid,
    profile: ConvexProfile,
    x0,
    L: float,
    psi: TimeWeight,
) -> ConvexPairingResult:
    """Pairing of the defect with chi(|y|/L) grad F(|y|^2) and its split.

    The Hessian part dominates 2 * int chi F' d trace(R) whenever the
    defect is PSD (F'' >= 0 and the y x y contraction is nonnegative);
    the cutoff part lives on the annulus L <= |y| <= 2L and decays with
    the trace budget as L grows.
    """
    x0 = np.asarray(x0, dtype=float)
    solid = grid.solid_interior
    if np.any(solid):
        pts = grid_points(grid)[solid]
        r = np.hypot(pts[..., 0] - x0[0], pts[..., 1] - x0[1])
        if float(np.max(r)) > profile.r0:
            raise GeometryError("pairing ball {|x-x0| <= r0} must contain the obstacle")
    phi = ConvexProfileGradient(profile, x0, L)
    pts = grid_points(grid)
    J = phi.jacobian(pts)
    H = phi.hessian_part(pts)
    C = phi.cutoff_part(pts)
    y = pts - x0
    z = np.sum(y * y, axis=-1)
    from .testfns import cutoff_chi

    w_trace = 2.0 * cutoff_chi(np.sqrt(z) / L) * profile.fprime(z)

    w = trapezoid_weights(defect.times) * psi.value(defect.times)
    area = grid.cell_area
    pairing = float(np.einsum("t,txy->", w, defect.contract(J))) * area
    hessian_term = float(np.einsum("t,txy->", w, defect.contract(H))) * area
    cutoff_term = float(np.einsum("t,txy->", w, defect.contract(C))) * area
    trace_lb = float(np.einsum("t,txy->", w, w_trace * defect.trace)) * area
    return ConvexPairingResult(
        L=L,
        pairing=pairing,
        hessian_term=hessian_term,
        cutoff_term=cutoff_term,
        trace_lower_bound=trace_lb,
    )


def convex_pairing_schedule(defect, grid, profile, x0, L_schedule, psi):
    """convex_pairing over an increasing L schedule (cutoff-decay report)."""
    return [convex_pairing(defect, grid, profile, x0, L, psi) for L in L_schedule]


# ---------------------------------------------------------------------------
# Far-field momentum decay


@dataclass
class FarFieldDecayRow:
    L: float
    value: float  # (1/L) mean_n timeavg int_annulus |m - m_inf|
    m1_value: float  # density-window part
    m2_value: float  # complement part
    bound1: float
    bound2: float
    annulus_area: float
    truncated: bool


def far_field_decay(
    ens: Ensemble,
    x0,
    L_schedule: Sequence[float],
    cert: Optional[CoercivityCertificate] = None,
) -> list:
    """Annulus decay diagnostic with the density-window splitting.

    Values are time-averaged over the snapshot window; bounds come from
    Cauchy-Schwarz / Hoelder with the calibrated window constants.
    """
    if cert is None:
        cert = calibrate_coercivity(ens.law, ens.far, n_angle=16)
    grid, law, far = ens.grid, ens.law, ens.far
    minf = far.m_inf
    g = law.gamma
    q = 2.0 * g / (g + 1.0)
    times = ens.times
    w = trapezoid_weights(times)
    span = float(times[-1] - times[0])
    w_avg = w / span if span > 0.0 else np.array([1.0])
    area = grid.cell_area

    rows = []
    for L in L_schedule:
        region = annulus_cells(grid, x0, L)
        ball_ok = (
            x0[0] - 2.0 * L >= grid.x_min
            and x0[0] + 2.0 * L <= grid.x_max
            and x0[1] - 2.0 * L >= grid.y_min
            and x0[1] + 2.0 * L <= grid.y_max
        )
        cells = region.cells
        vals = np.zeros(ens.n)
        m1s = np.zeros(ens.n)
        m2s = np.zeros(ens.n)
        b1s = np.zeros(ens.n)
        b2s = np.zeros(ens.n)
        for k, member in enumerate(ens.members):
            _, rho, mx, my = member.field_arrays()
            tot = np.zeros(times.size)
            m1 = np.zeros(times.size)
            m2 = np.zeros(times.size)
            e_ann = np.zeros(times.size)
            for ti in range(times.size):
                r = rho[ti][cells]
                dm = np.hypot(mx[ti][cells] - minf[0], my[ti][cells] - minf[1])
                win = (r >= 0.5 * far.rho_inf) & (r <= 2.0 * far.rho_inf)
                tot[ti] = float(np.sum(dm)) * area
                m1[ti] = float(np.sum(dm[win])) * area
                m2[ti] = float(np.sum(dm[~win])) * area
                e = relative_energy(law, r, mx[ti][cells], my[ti][cells], far)
                e_ann[ti] = float(np.sum(e)) * area
            vals[k] = float(np.dot(w_avg, tot))
            m1s[k] = float(np.dot(w_avg, m1))
            m2s[k] = float(np.dot(w_avg, m2))
            b1s[k] = float(
                np.dot(w_avg, np.sqrt(cert.c_m_window * e_ann) * math.sqrt(region.area))
            )
            b2s[k] = float(
                np.dot(
                    w_avg,
                    (cert.c_m_outside * e_ann) ** (1.0 / q)
                    * region.area ** (1.0 - 1.0 / q),
                )
            )
        rows.append(
            FarFieldDecayRow(
                L=float(L),
                value=float(np.mean(vals)) / L,
                m1_value=float(np.mean(m1s)) / L,
                m2_value=float(np.mean(m2s)) / L,
                bound1=float(np.mean(b1s)) / L,
                bound2=float(np.mean(b2s)) / L,
                annulus_area=region.area,
                truncated=not ball_ok,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Generalized momentum balance with the defect


@dataclass
class DefectResidualReport:
    barycentric_form: float
    defect_pairing: float
    member_mean_form: float
    identity_gap: float  # barycentric + pairing - member mean: zero to rounding
    residual: float  # barycentric + pairing - viscous remainder
    viscous_remainder: float
    viscous_bound: float


def defect_momentum_residual(
    ens: Ensemble,
    defect: Optional[DefectField],
    phi_vec,
    psi: TimeWeight,
    upto: Optional[int] = None,
) -> DefectResidualReport:
    """Barycentric weak momentum form plus defect pairing, with the exact
    cancellation against the Cesaro mean of member forms and the viscous
    remainder listed separately."""
    from .weakform import weak_momentum_form

    upto = ens.n if upto is None else upto
    ces = cesaro_average(ens, upto)
    if defect is None:
        defect = reynolds_defect(ces, ens.law)
    grid, law = ens.grid, ens.law
    times = ens.times

    member_forms = [
        weak_momentum_form(ens.members[k].field_arrays(), grid, law, phi_vec, psi,
                           far=ens.far)
        for k in range(upto)
    ]
    member_mean = math.fsum(member_forms) / upto

    bary = weak_momentum_form((times, ces.rho, ces.mx, ces.my), grid, law, phi_vec,
                              psi, far=ens.far)

    pts = grid_points(grid)
    J = phi_vec.jacobian(pts)
    w = trapezoid_weights(times) * psi.value(times)
    pairing = float(np.einsum("t,txy->", w, defect.contract(J))) * grid.cell_area

    viscous = 0.0
    visc_sq_norm = 0.0
    if ens.visc is not None:
        area = grid.cell_area
        remainders = []
        for k in range(upto):
            member = ens.members[k]
            acc = 0.0
            for ti, st in enumerate(member.states):
                G = velocity_gradient(st, grid, floor=1e-10 * ens.far.rho_inf)
                S = viscous_stress(ens.visc, G)
                sc = (
                    S[..., 0, 0] * J[..., 0, 0]
                    + S[..., 0, 1] * J[..., 0, 1]
                    + S[..., 1, 0] * J[..., 1, 0]
                    + S[..., 1, 1] * J[..., 1, 1]
                )
                acc += w[ti] * float(np.sum(sc)) * area
            remainders.append(member.epsilon * acc)
        viscous = math.fsum(remainders) / upto
        grad_sq = np.sum(J * J, axis=(-2, -1))
        wq = trapezoid_weights(times) * psi.value(times) ** 2
        visc_sq_norm = float(np.sum(wq) * np.sum(grad_sq) * area)
    budget = energy_budget(ens, upto)
    mean_eps = float(np.mean(ens.epsilons[:upto]))
    visc_const = 0.0
    if ens.visc is not None:
        visc_const = max(2.0 * ens.visc.mu, 2.0 * ens.visc.lam)
    bound = math.sqrt(visc_sq_norm * visc_const) * math.sqrt(mean_eps) * math.sqrt(budget)

    total = bary + pairing
    return DefectResidualReport(
        barycentric_form=bary,
        defect_pairing=pairing,
        member_mean_form=member_mean,
        identity_gap=total - member_mean,
        residual=total - viscous,
        viscous_remainder=viscous,
        viscous_bound=bound,
    )
