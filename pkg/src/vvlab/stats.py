"""Ensembles, Cesaro-averaged fields and statistical-limit metrics.

Running means are accumulated in member-index order with the exact
recurrence avg += (x - avg)/(n+1), so reports are deterministic given
the member ordering; scalar expectations use compensated summation and
are therefore exactly permutation-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GridMismatchError
from .grid import CompactRegion, FarField, Grid
from .quadrature import trapezoid_weights
from .solver import Trajectory
from .testfns import ScalarBump, TimeWeight, VectorBump, grid_points
from .thermo import GasLaw, ViscosityPair, relative_energy

STRICT_SCHEDULES = ("harmonic", "geometric")


@dataclass
class Ensemble:
    """N member trajectories sharing one grid and snapshot-time list."""

    members: list
    grid: Grid
    law: GasLaw
    far: FarField
    visc: Optional[ViscosityPair] = None
    schedule_kind: str = "unspecified"

    def __post_init__(self):
        if not self.members:
            raise GridMismatchError("ensemble needs at least one member")
        t0 = self.members[0].times
        for m in self.members:
            if m.states and m.states[0].rho.shape != self.grid.shape_full:
                raise GridMismatchError("member does not match the grid")
            if len(m.times) != len(t0) or np.any(m.times != t0):
                raise GridMismatchError("members disagree on snapshot times")
        eps = self.epsilons
        if np.any(np.diff(eps) > 0.0):
            raise GridMismatchError("epsilons must be non-increasing")
        if self.schedule_kind in STRICT_SCHEDULES and np.any(np.diff(eps) >= 0.0):
            raise GridMismatchError("schedule requires strictly decreasing epsilons")

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([m.epsilon for m in self.members])

    @property
    def times(self) -> np.ndarray:
        return self.members[0].times


@dataclass
class CesaroField:
    """Running means of fields and of the nonlinear composites."""

    times: np.ndarray
    rho: np.ndarray  # (T, nx, ny)
    mx: np.ndarray
    my: np.ndarray
    kin_xx: np.ndarray  # mean of 1_{rho>0} m x m / rho
    kin_xy: np.ndarray
    kin_yy: np.ndarray
    pressure: np.ndarray  # mean of p(rho)
    rel_energy: np.ndarray  # mean of E(rho, m | far)
    n_used: int = 0
    ensemble_id: str = ""


def _member_planes(traj: Trajectory, law: GasLaw, far: FarField):
    _, rho, mx, my = traj.field_arrays()
    pos = rho > 0.0
    rs = np.where(pos, rho, 1.0)
    kxx = np.where(pos, mx * mx / rs, 0.0)
    kxy = np.where(pos, mx * my / rs, 0.0)
    kyy = np.where(pos, my * my / rs, 0.0)
    p = law.a * rho**law.gamma
    erel = relative_energy(law, rho, mx, my, far)
    return (rho, mx, my, kxx, kxy, kyy, p, erel)


def cesaro_average(ens: Ensemble, upto: int, ensemble_id: str = "") -> CesaroField:
    """Arithmetic means over the first `upto` members, per snapshot time."""
    if not 1 <= upto <= ens.n:
        raise ValueError("upto must lie in 1..member count")
    acc = None
    for k in range(upto):
        planes = _member_planes(ens.members[k], ens.law, ens.far)
        if acc is None:
            acc = [p.astype(float).copy() for p in planes]
        else:
            for a, x in zip(acc, planes):
                a += (x - a) / (k + 1)
    return CesaroField(
        times=ens.times.copy(),
        rho=acc[0],
        mx=acc[1],
        my=acc[2],
        kin_xx=acc[3],
        kin_xy=acc[4],
        kin_yy=acc[5],
        pressure=acc[6],
        rel_energy=acc[7],
        n_used=upto,
        ensemble_id=ensemble_id,
    )


def barycenter(ens: Ensemble, upto: int):
    """(rho_bar, mx_bar, my_bar) fields: the field part of cesaro_average."""
    ces = cesaro_average(ens, upto)
    return ces.rho, ces.mx, ces.my


def member_budget(traj: Trajectory, grid: Grid, law: GasLaw, far: FarField) -> float:
    """sup-in-time relative energy plus the dissipation integral, one member."""
    fl = grid.fluid_interior
    _, rho, mx, my = traj.field_arrays()
    sup_e = 0.0
    for k in range(rho.shape[0]):
        e = relative_energy(law, rho[k][fl], mx[k][fl], my[k][fl], far)
        sup_e = max(sup_e, float(np.sum(e)) * grid.cell_area)
    sup_e = max(sup_e, traj.sup_relative_energy)
    return sup_e + traj.dissipation_integral


def energy_budget(ens: Ensemble, upto: int) -> float:
    """Cesaro average of member budgets over the first `upto` members."""
    vals = [member_budget(ens.members[k], ens.grid, ens.law, ens.far)
            for k in range(upto)]
    return math.fsum(vals) / upto


def expectation(ens: Ensemble, upto: int, observable: Callable[[Trajectory], float]) -> float:
    """(1/N) sum of a per-member scalar observable; permutation-exact."""
    vals = [float(observable(ens.members[k])) for k in range(upto)]
    return math.fsum(vals) / upto


# ---------------------------------------------------------------------------
# Observable library


class StateBump:
    """Bounded composite b(rho, mx, my): a smooth bump in state space."""

    def __init__(self, center, radii, amplitude: float = 1.0):
        self._bump = ScalarBump(center, radii, amplitude)
        self.bound = abs(amplitude)

    def __call__(self, rho, mx, my):
        pts = np.stack([np.asarray(rho, dtype=float),
                        np.asarray(mx, dtype=float),
                        np.asarray(my, dtype=float)], axis=-1)
        return self._bump.value(pts)


@dataclass
class ObservableLibrary:
    scalars: list
    vectors: list
    composites: list
    psi: TimeWeight


def _fit_radius(grid: Grid, cx: float, cy: float) -> float:
    """Largest bump radius at (cx, cy) clearing the obstacle and the box."""
    r = min(cx - grid.x_min, grid.x_max - cx, cy - grid.y_min, grid.y_max - cy)
    obst = grid.obstacle
    if obst.kind == "disc":
        d = math.hypot(cx - obst.center[0], cy - obst.center[1]) - obst.radius
        r = min(r, d)
    elif obst.kind == "polygon":
        v = obst.vertices
        c = v.mean(axis=0)
        rad = float(np.max(np.hypot(v[:, 0] - c[0], v[:, 1] - c[1])))
        r = min(r, math.hypot(cx - c[0], cy - c[1]) - rad)
    return r


def build_observable_library(
    grid: Grid,
    far: FarField,
    t0: float,
    t1: float,
    n_scalar: int = 32,
    n_vector: int = 16,
    n_composite: int = 16,
    seed: int = 0,
) -> ObservableLibrary:
    """Deterministic library of test functions and bounded composites."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    h = max(grid.dx, grid.dy)

    def sample_spatial():
        for _ in range(200):
            cx = rng.uniform(grid.x_min + 3 * h, grid.x_max - 3 * h)
            cy = rng.uniform(grid.y_min + 3 * h, grid.y_max - 3 * h)
            r = 0.8 * _fit_radius(grid, cx, cy)
            if r >= 3.0 * h:
                return cx, cy, r
        raise GridMismatchError("could not place a test function in the fluid")

    scalars = []
    for _ in range(n_scalar):
        cx, cy, r = sample_spatial()
        scalars.append(ScalarBump((cx, cy), r))
    vectors = []
    for _ in range(n_vector):
        cx, cy, r = sample_spatial()
        th = rng.uniform(0.0, 2.0 * np.pi)
        vectors.append(VectorBump((cx, cy), r, (math.cos(th), math.sin(th))))
    composites = []
    minf = far.m_inf
    m_scale = max(1.0, float(np.hypot(*minf))) * far.rho_inf
    for _ in range(n_composite):
        c = (
            far.rho_inf * (1.0 + 0.5 * (rng.random() - 0.5)),
            minf[0] + m_scale * (rng.random() - 0.5),
            minf[1] + m_scale * (rng.random() - 0.5),
        )
        radii = (0.75 * far.rho_inf, 1.5 * m_scale, 1.5 * m_scale)
        composites.append(StateBump(c, radii))
    width = t1 - t0
    psi = TimeWeight(t0 + 0.05 * width, t1 - 0.05 * width)
    return ObservableLibrary(scalars=scalars, vectors=vectors,
                             composites=composites, psi=psi)


def pairing_vector(traj: Trajectory, grid: Grid, scalars, vectors,
                   psi: TimeWeight) -> np.ndarray:
    """Space-time pairings (int rho phi_i, ..., int m . phi_j, ...) of one member."""
    times, rho, mx, my = traj.field_arrays()
    w = trapezoid_weights(times) * psi.value(times)
    pts = grid_points(grid)
    area = grid.cell_area
    out = []
    for phi in scalars:
        v = phi.value(pts)
        out.append(float(np.einsum("t,txy,xy->", w, rho, v)) * area)
    for phi in vectors:
        v = phi.value(pts)
        out.append(float(np.einsum("t,txy,xy->", w, mx, v[..., 0])) * area
                   + float(np.einsum("t,txy,xy->", w, my, v[..., 1])) * area)
    return np.array(out)


def trajectory_observable(b, grid: Grid, scalars, vectors, psi: TimeWeight):
    """Bounded composite of the pairing vector: the (pro2)-style observable.

    b is any callable on vectors of length len(scalars) + len(vectors).
    """

    def fn(traj: Trajectory) -> float:
        return float(b(pairing_vector(traj, grid, scalars, vectors, psi)))

    return fn


def composite_field(traj: Trajectory, b) -> np.ndarray:
    """Pointwise b(rho, m) over (T, nx, ny)."""
    _, rho, mx, my = traj.field_arrays()
    return b(rho, mx, my)


# ---------------------------------------------------------------------------
# Convergence metrics


def _window_weights(times: np.ndarray, t_window) -> tuple[np.ndarray, np.ndarray]:
    """(selected time indices, trapezoid weights over the selection)."""
    if t_window is None:
        sel = np.arange(times.size)
    else:
        ta, tb = t_window
        sel = np.where((times >= ta) & (times <= tb))[0]
    if sel.size == 0:
        raise ValueError("time window selects no snapshots")
    w = trapezoid_weights(times[sel]) if sel.size > 1 else np.array([1.0])
    return sel, w


def l1_spacetime(field_seq: np.ndarray, times: np.ndarray, region: CompactRegion,
                 area: float, t_window=None) -> float:
    """L1 norm over (time window) x (region) by trapezoid/cell quadrature."""
    sel, w = _window_weights(times, t_window)
    vals = [float(np.sum(np.abs(field_seq[k][region.cells]))) * area for k in sel]
    return float(np.dot(w, vals))


def lp_spacetime(field_seq: np.ndarray, times: np.ndarray, region: CompactRegion,
                 area: float, p: float, t_window=None) -> float:
    sel, w = _window_weights(times, t_window)
    vals = [float(np.sum(np.abs(field_seq[k][region.cells]) ** p)) * area for k in sel]
    return float(np.dot(w, vals)) ** (1.0 / p)


def s_convergence_metric(
    ens: Ensemble,
    n_schedule: Sequence[int],
    composites,
    region: CompactRegion,
    reference: Optional[dict] = None,
    t_window=None,
) -> dict:
    """L1 distance of running composite means to the reference, per b per N.

    reference maps composite index -> (T, nx, ny) field; None means the
    full-ensemble average. Returns {b_index: {N: distance}}.
    """
    times = ens.times
    area = ens.grid.cell_area
    ns = sorted(set(int(n) for n in n_schedule))
    if ns and (ns[0] < 1 or ns[-1] > ens.n):
        raise ValueError("N schedule out of range")
    out = {}
    for bi, b in enumerate(composites):
        if reference is not None and bi in reference:
            ref = reference[bi]
        else:
            avg = None
            for k in range(ens.n):
                x = composite_field(ens.members[k], b)
                avg = x.astype(float).copy() if avg is None else avg + (x - avg) / (k + 1)
            ref = avg
        avg = None
        dists = {}
        for k in range(max(ns)):
            x = composite_field(ens.members[k], b)
            avg = x.astype(float).copy() if avg is None else avg + (x - avg) / (k + 1)
            if (k + 1) in ns:
                dists[k + 1] = l1_spacetime(avg - ref, times, region, area, t_window)
        out[bi] = dists
    return out


def statistical_convergence_fraction(
    ens: Ensemble,
    eps_threshold: float,
    region: CompactRegion,
    reference=None,
    t_window=None,
) -> np.ndarray:
    """Counting fractions of Eq-style deviations for every N in 1..n.

    Member deviation: ||rho_n - rho_ref||_{L^gamma(K)} +
    ||m_n - m_ref||_{L^{2g/(g+1)}(K)} over the space-time window K.
    """
    times = ens.times
    area = ens.grid.cell_area
    g = ens.law.gamma
    q = 2.0 * g / (g + 1.0)
    if reference is None:
        reference = barycenter(ens, ens.n)
    rho_r, mx_r, my_r = reference
    exceeds = np.zeros(ens.n, dtype=bool)
    for k in range(ens.n):
        _, rho, mx, my = ens.members[k].field_arrays()
        d_rho = lp_spacetime(rho - rho_r, times, region, area, g, t_window)
        dm = np.hypot(mx - mx_r, my - my_r)
        d_m = lp_spacetime(dm, times, region, area, q, t_window)
        exceeds[k] = (d_rho + d_m) > eps_threshold
    counts = np.cumsum(exceeds)
    return counts / np.arange(1, ens.n + 1)


# ---------------------------------------------------------------------------
# Moduli of continuity


@dataclass
class ModulusReport:
    lipschitz_stat: float
    holder_half_stat: float
    lipschitz_bound: float
    holder_bound: float
    budget: float


def _member_moduli(traj: Trajectory, grid: Grid, phi_scalar, phi_vector):
    times, rho, mx, my = traj.field_arrays()
    if times.size < 2:
        raise ValueError("moduli need at least two snapshot times")
    area = grid.cell_area
    pts = grid_points(grid)
    pv = phi_scalar.value(pts)
    vv = phi_vector.value(pts)
    r_pair = np.einsum("txy,xy->t", rho, pv) * area
    m_pair = (np.einsum("txy,xy->t", mx, vv[..., 0])
              + np.einsum("txy,xy->t", my, vv[..., 1])) * area
    lip = 0.0
    hol = 0.0
    for i in range(times.size):
        for j in range(i + 1, times.size):
            dt = times[j] - times[i]
            lip = max(lip, abs(r_pair[j] - r_pair[i]) / dt)
            hol = max(hol, abs(m_pair[j] - m_pair[i]) / math.sqrt(dt))
    return lip, hol


def modulus_of_continuity(ens: Ensemble, upto: int, phi_scalar, phi_vector,
                          cert=None) -> ModulusReport:
    """Cesaro means of the time-difference quotients plus an a-priori bound.

    The bound is assembled from the gradient sup-norms, the coercivity
    certificate and the measured energy budget; it is reported for
    comparison, not asserted.
    """
    vals = [_member_moduli(ens.members[k], ens.grid, phi_scalar, phi_vector)
            for k in range(upto)]
    lip = math.fsum(v[0] for v in vals) / upto
    hol = math.fsum(v[1] for v in vals) / upto
    budget = energy_budget(ens, upto)
    b_lip, b_hol = modulus_bounds(ens, upto, phi_scalar, phi_vector, budget, cert)
    return ModulusReport(lipschitz_stat=lip, holder_half_stat=hol,
                         lipschitz_bound=b_lip, holder_bound=b_hol, budget=budget)


def _box_area(fn, grid: Grid) -> float:
    box = fn.support_box
    w = min(box[0, 1], grid.x_max) - max(box[0, 0], grid.x_min)
    h = min(box[1, 1], grid.y_max) - max(box[1, 0], grid.y_min)
    return max(w, 0.0) * max(h, 0.0)


def modulus_bounds(ens: Ensemble, upto: int, phi_scalar, phi_vector,
                   budget: float, cert=None) -> tuple[float, float]:
    """Rigorous c(phi, budget) bounds for the two moduli statistics.

    Uses: the continuity equation for the Lipschitz quotient; the
    momentum equation, the trace comparison and the dissipation budget
    for the Hoelder quotient. `cert` is a CoercivityCertificate; if
    omitted, one is calibrated at default resolution.
    """
    from .thermo import calibrate_coercivity

    if cert is None:
        cert = calibrate_coercivity(ens.law, ens.far, n_angle=16)
    grid, law, far = ens.grid, ens.law, ens.far
    g = law.gamma
    q = 2.0 * g / (g + 1.0)
    pts = grid_points(grid)

    grad_sup_s = float(np.max(np.abs(phi_scalar.grad(pts)))) if hasattr(phi_scalar, "grad") else 0.0
    grad_sup_v = float(np.max(np.abs(phi_vector.jacobian(pts))))
    minf = far.m_inf
    m_inf_norm = float(np.hypot(*minf))

    K_s = _box_area(phi_scalar, grid)
    K_v = _box_area(phi_vector, grid)
    cm = cert.c_m_window + cert.c_m_outside
    crho = cert.c_rho_window + cert.c_rho_outside

    def int_abs_dm(K):
        # int_K |m - m_inf| <= |K|^{1-1/q} (|K| + cm*E)^{1/q}
        return K ** (1.0 - 1.0 / q) * (K + cm * budget) ** (1.0 / q)

    def int_abs_drho(K):
        win = math.sqrt(K) * math.sqrt(cert.c_rho_window * budget)
        out = K ** (1.0 - 1.0 / g) * (cert.c_rho_outside * budget) ** (1.0 / g)
        return win + out

    bound_lip = grad_sup_s * (m_inf_norm * K_s + int_abs_dm(K_s))

    # sup_t int_K (|m|^2/rho + p) <= max(2, g-1) * sup_t int_K E_total
    # and E_total = E_rel + grad E(base).(drho, dm) + E(base).
    e_base = 0.5 * far.rho_inf * (far.u_inf[0] ** 2 + far.u_inf[1] ** 2) + float(
        (law.a / (g - 1.0)) * far.rho_inf**g
    )
    g_rho = abs(-0.5 * (far.u_inf[0] ** 2 + far.u_inf[1] ** 2)
                + (law.a * g / (g - 1.0)) * far.rho_inf ** (g - 1.0))
    u_inf_norm = float(np.hypot(*far.u_inf))
    int_E = budget + g_rho * int_abs_drho(K_v) + u_inf_norm * int_abs_dm(K_v) + e_base * K_v
    flux_sup = max(2.0, g - 1.0) * 2.0 * int_E
    T = float(ens.times[-1] - ens.times[0])
    mean_eps = float(np.mean(ens.epsilons[:upto]))
    visc = ens.visc if ens.visc is not None else ViscosityPair(0.0, 0.0)
    visc_const = max(2.0 * visc.mu, 2.0 * visc.lam)
    bound_hol = grad_sup_v * (
        math.sqrt(T) * flux_sup
        + math.sqrt(K_v * visc_const) * math.sqrt(mean_eps) * math.sqrt(budget)
    )
    return bound_lip, bound_hol
