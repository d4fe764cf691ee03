"""Weak-form residuals and the statistical-equivalence comparator.

Test functions are separable psi(t)*phi(x) with psi compactly supported
in the snapshot window, so the time-boundary terms vanish and residuals
reduce to space-time quadratures of the interior pairings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import FarField, Grid
from .quadrature import trapezoid_weights
from .solver import Trajectory, velocity_gradient
from .stats import Ensemble
from .testfns import (
    AngularKernel,
    TimeWeight,
    check_support,
    check_time_support,
    grid_points,
)
from .thermo import GasLaw, ViscosityPair, viscous_stress


def fields_of(traj: Trajectory):
    """(times, rho, mx, my) stacked interior arrays of a trajectory."""
    return traj.field_arrays()


def _time_derivative_pairing(samples, times, psi: TimeWeight) -> float:
    """int f psi' dt as the summation-by-parts Stieltjes sum.

    sum_k (f_k + f_{k+1})/2 * (psi_{k+1} - psi_k): second-order accurate
    and exactly zero for constant f because psi vanishes at the window
    ends. This is what makes constant states annihilate the weak forms
    to rounding instead of to quadrature error.
    """
    psi_v = psi.value(times)
    f = np.asarray(samples, dtype=float)
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(psi_v)))


def weak_continuity_form(fields, grid: Grid, phi_scalar, psi: TimeWeight,
                         far: FarField | None = None) -> float:
    """int [rho phi psi' + psi (m - m_inf) . grad phi] dx dt.

    Subtracting the constant far-field momentum changes nothing in the
    continuum (grad phi integrates to zero) and removes the constant
    state's spatial quadrature noise.
    """
    times, rho, mx, my = fields
    pts = grid_points(grid)
    pv = phi_scalar.value(pts)
    gv = phi_scalar.grad(pts)
    minf = far.m_inf if far is not None else np.zeros(2)
    w = trapezoid_weights(times)
    psi_v = psi.value(times)
    area = grid.cell_area
    pair_r = np.array([float(np.sum(rho[ti] * pv)) for ti in range(times.size)]) * area
    total = _time_derivative_pairing(pair_r, times, psi)
    for ti in range(times.size):
        adv = float(np.sum((mx[ti] - minf[0]) * gv[..., 0]
                           + (my[ti] - minf[1]) * gv[..., 1]))
        total += w[ti] * psi_v[ti] * adv * area
    return total


def flux_tensor(law: GasLaw, rho, mx, my):
    """(T11, T12, T22) of 1_{rho>0} m x m / rho + p(rho) I, pointwise."""
    pos = rho > 0.0
    rs = np.where(pos, rho, 1.0)
    p = law.a * rho**law.gamma
    t11 = np.where(pos, mx * mx / rs, 0.0) + p
    t12 = np.where(pos, mx * my / rs, 0.0)
    t22 = np.where(pos, my * my / rs, 0.0) + p
    return t11, t12, t22


def weak_momentum_form(fields, grid: Grid, law: GasLaw, phi_vec, psi: TimeWeight,
                       far: FarField | None = None) -> float:
    """int [m . phi psi' + psi (flux(U) - flux(U_inf)) : grad phi] dx dt.

    flux(U) = 1_{rho>0} m x m / rho + p(rho) I. The constant far-field
    flux drops out in the continuum and suppresses quadrature noise on
    constant states (and cancels identically in the defect identity).
    """
    times, rho_seq, mx_seq, my_seq = fields
    pts = grid_points(grid)
    v = phi_vec.value(pts)
    J = phi_vec.jacobian(pts)
    w = trapezoid_weights(times)
    psi_v = psi.value(times)
    area = grid.cell_area
    if far is not None:
        minf = far.m_inf
        f11_inf, f12_inf, f22_inf = flux_tensor(
            law, np.asarray(far.rho_inf), np.asarray(minf[0]), np.asarray(minf[1])
        )
    else:
        f11_inf = f12_inf = f22_inf = 0.0
    pair_m = np.array([
        float(np.sum(mx_seq[ti] * v[..., 0] + my_seq[ti] * v[..., 1]))
        for ti in range(times.size)
    ]) * area
    total = _time_derivative_pairing(pair_m, times, psi)
    for ti in range(times.size):
        t11, t12, t22 = flux_tensor(law, rho_seq[ti], mx_seq[ti], my_seq[ti])
        conv = float(
            np.sum(
                (t11 - f11_inf) * J[..., 0, 0]
                + (t12 - f12_inf) * (J[..., 0, 1] + J[..., 1, 0])
                + (t22 - f22_inf) * J[..., 1, 1]
            )
        )
        total += w[ti] * psi_v[ti] * conv * area
    return total


@dataclass
class EulerResidual:
    momentum: float
    continuity: float


def euler_residual(fields, grid: Grid, law: GasLaw, phi_vec, psi: TimeWeight,
                   phi_scalar=None, far: FarField | None = None,
                   validate_support: bool = True) -> EulerResidual:
    """Weak Euler residuals of a field history (zero for exact solutions).

    Passing the far field enables the constant-flux renormalization, so
    uniform far-field states annihilate the residual to rounding.
    """
    times = fields[0]
    if validate_support:
        check_support(phi_vec, grid)
        if phi_scalar is not None:
            check_support(phi_scalar, grid)
        check_time_support(psi, float(times[0]), float(times[-1]))
    mom = weak_momentum_form(fields, grid, law, phi_vec, psi, far=far)
    cont = 0.0
    if phi_scalar is not None:
        cont = weak_continuity_form(fields, grid, phi_scalar, psi, far=far)
    return EulerResidual(momentum=mom, continuity=cont)


def weak_residual_ns(traj: Trajectory, grid: Grid, law: GasLaw, visc: ViscosityPair,
                     phi_scalar, phi_vec, psi: TimeWeight,
                     far: FarField | None = None,
                     floor: float = 0.0) -> tuple[float, float]:
    """(continuity, momentum) weak residuals of one viscous trajectory.

    The momentum form subtracts the member's scaled viscous stress term
    epsilon * S(grad u) : grad phi assembled from cell-centered gradients.
    """
    check_support(phi_scalar, grid)
    check_support(phi_vec, grid)
    times = traj.times
    check_time_support(psi, float(times[0]), float(times[-1]))
    fields = traj.field_arrays()
    cont = weak_continuity_form(fields, grid, phi_scalar, psi, far=far)
    mom = weak_momentum_form(fields, grid, law, phi_vec, psi, far=far)

    pts = grid_points(grid)
    J = phi_vec.jacobian(pts)
    w = trapezoid_weights(times)
    psi_v = psi.value(times)
    area = grid.cell_area
    visc_term = 0.0
    for ti, st in enumerate(traj.states):
        G = velocity_gradient(st, grid, floor)
        S = viscous_stress(visc, G)
        sc = float(np.sum(S[..., 0, 0] * J[..., 0, 0] + S[..., 0, 1] * J[..., 0, 1]
                          + S[..., 1, 0] * J[..., 1, 0] + S[..., 1, 1] * J[..., 1, 1]))
        visc_term += w[ti] * psi_v[ti] * sc * area
    mom -= traj.epsilon * visc_term
    return cont, mom


# ---------------------------------------------------------------------------
# Statistical equivalence (expectation comparison of the five observables)


@dataclass
class EquivalenceRow:
    klass: str
    observable_id: int
    pivot_id: int  # -1 when not applicable
    value_a: float
    value_b: float

    @property
    def diff(self) -> float:
        return self.value_a - self.value_b

    @property
    def abs_diff(self) -> float:
        return abs(self.diff)

    @property
    def rel_diff(self) -> float:
        scale = max(abs(self.value_a), abs(self.value_b))
        return self.abs_diff / scale if scale > 0.0 else 0.0


def default_pivots(grid: Grid) -> list:
    """Obstacle center (or box center) plus the four quadrant midpoints."""
    cx = 0.5 * (grid.x_min + grid.x_max)
    cy = 0.5 * (grid.y_min + grid.y_max)
    if grid.obstacle.kind == "disc":
        c0 = tuple(grid.obstacle.center)
    elif grid.obstacle.kind == "polygon":
        c0 = tuple(grid.obstacle.vertices.mean(axis=0))
    else:
        c0 = (cx, cy)
    qx = 0.25 * (grid.x_max - grid.x_min)
    qy = 0.25 * (grid.y_max - grid.y_min)
    return [c0, (cx - qx, cy - qy), (cx + qx, cy - qy), (cx - qx, cy + qy), (cx + qx, cy + qy)]


def _member_pairings(member: Trajectory, grid: Grid, law: GasLaw, phi, psi,
                     kind: str, pivot=None) -> float:
    times, rho, mx, my = member.field_arrays()
    pts = grid_points(grid)
    w = trapezoid_weights(times) * psi.value(times)
    area = grid.cell_area
    total = 0.0
    if kind == "density":
        pv = phi.value(pts)
        for ti in range(times.size):
            total += w[ti] * float(np.sum(rho[ti] * pv)) * area
        return total
    if kind == "momentum":
        v = phi.value(pts)
        for ti in range(times.size):
            total += w[ti] * float(np.sum(mx[ti] * v[..., 0] + my[ti] * v[..., 1])) * area
        return total
    pv = phi.value(pts)
    if kind == "kinetic":
        for ti in range(times.size):
            pos = rho[ti] > 0.0
            rs = np.where(pos, rho[ti], 1.0)
            k = np.where(pos, (mx[ti] ** 2 + my[ti] ** 2) / rs, 0.0)
            total += w[ti] * float(np.sum(k * pv)) * area
        return total
    if kind == "internal":
        for ti in range(times.size):
            P = (law.a / (law.gamma - 1.0)) * rho[ti] ** law.gamma
            total += w[ti] * float(np.sum(P * pv)) * area
        return total
    if kind == "angular":
        kernel = AngularKernel(tuple(pivot))
        for ti in range(times.size):
            pos = rho[ti] > 0.0
            rs = np.where(pos, rho[ti], 1.0)
            qv = kernel.quadratic(pts, mx[ti], my[ti])
            ang = np.where(pos, qv / rs, 0.0)
            total += w[ti] * float(np.sum(ang * pv)) * area
        return total
    raise ValueError(f"unknown observable kind {kind!r}")


def _expect(ens: Ensemble, grid, law, phi, psi, kind, pivot=None) -> float:
    vals = [_member_pairings(m, grid, law, phi, psi, kind, pivot) for m in ens.members]
    return math.fsum(vals) / len(vals)


def statistical_equivalence_report(
    ensA: Ensemble,
    ensB: Ensemble,
    scalars: Sequence,
    vectors: Sequence,
    psi: TimeWeight,
    pivots: Optional[Sequence] = None,
) -> list:
    """Expectation discrepancies of the five observable classes.

    Scalar test functions drive the density, kinetic, internal and
    angular rows; vector ones drive momentum. Expectations use
    compensated member sums, so permuting members changes nothing.
    """
    if not ensA.grid.same_layout(ensB.grid):
        from .errors import GridMismatchError

        raise GridMismatchError("ensembles live on incompatible grids")
    if pivots is None:
        pivots = default_pivots(ensA.grid)
    grid, law = ensA.grid, ensA.law
    rows = []
    for i, phi in enumerate(scalars):
        a = _expect(ensA, grid, law, phi, psi, "density")
        b = _expect(ensB, grid, law, phi, psi, "density")
        rows.append(EquivalenceRow("SE1-density", i, -1, a, b))
    for i, phi in enumerate(vectors):
        a = _expect(ensA, grid, law, phi, psi, "momentum")
        b = _expect(ensB, grid, law, phi, psi, "momentum")
        rows.append(EquivalenceRow("SE1-momentum", i, -1, a, b))
    for i, phi in enumerate(scalars):
        a = _expect(ensA, grid, law, phi, psi, "kinetic")
        b = _expect(ensB, grid, law, phi, psi, "kinetic")
        rows.append(EquivalenceRow("SE2-kinetic", i, -1, a, b))
    for i, phi in enumerate(scalars):
        a = _expect(ensA, grid, law, phi, psi, "internal")
        b = _expect(ensB, grid, law, phi, psi, "internal")
        rows.append(EquivalenceRow("SE2-internal", i, -1, a, b))
    for pj, pivot in enumerate(pivots):
        for i, phi in enumerate(scalars):
            a = _expect(ensA, grid, law, phi, psi, "angular", pivot)
            b = _expect(ensB, grid, law, phi, psi, "angular", pivot)
            rows.append(EquivalenceRow("SE2-angular", i, pj, a, b))
    return rows


@dataclass
class IdentitySlack:
    slack: float
    scale: float


def kinetic_angular_identity_check(ens: Ensemble, x0, phi=None) -> IdentitySlack:
    """max |  |m.(x-x0)|^2 + (J m).m - |x-x0|^2 |m|^2  | over the ensemble.

    phi, when given, restricts the check to cells where it is nonzero.
    """
    grid = ens.grid
    pts = grid_points(grid)
    kernel = AngularKernel(tuple(x0))
    y = pts - np.asarray(x0, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    sel = np.ones(r2.shape, dtype=bool)
    if phi is not None:
        sel = np.abs(phi.value(pts)) > 0.0
    slack = 0.0
    scale = 0.0
    for member in ens.members:
        _, _, mx, my = member.field_arrays()
        for ti in range(mx.shape[0]):
            dot = y[..., 0] * mx[ti] + y[..., 1] * my[ti]
            lhs = dot**2 + kernel.quadratic(pts, mx[ti], my[ti])
            rhs = r2 * (mx[ti] ** 2 + my[ti] ** 2)
            slack = max(slack, float(np.max(np.abs((lhs - rhs)[sel]))))
            scale = max(scale, float(np.max(np.abs(rhs[sel]))))
    return IdentitySlack(slack=slack, scale=scale)
