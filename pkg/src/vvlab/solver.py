"""Explicit finite-volume solver for 2D isentropic Navier-Stokes flow.

Conservative update with Rusanov or HLL convective fluxes, centered
viscous fluxes scaled by the member viscosity epsilon*(mu, lam), no-slip
obstacle faces by momentum reflection, and a Dirichlet far-field ghost
ring (or periodic wrap in the test configuration). One trajectory is
advanced by one worker; distinct trajectories share nothing mutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import CflViolation, GridMismatchError, SolverBlowup
from .grid import FLUID, FarField, Grid
from .thermo import GasLaw, ViscosityPair, relative_energy, stress_dissipation

_MAX_STEPS = 10_000_000


@dataclass
class FluidState:
    """Density and momentum on the full (nx+2, ny+2) array with ghosts."""

    rho: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    time: float = 0.0

    def copy(self) -> "FluidState":
        return FluidState(self.rho.copy(), self.mx.copy(), self.my.copy(), self.time)

    def interior(self):
        """(rho, mx, my) views over interior cells, shape (nx, ny)."""
        sl = (slice(1, -1), slice(1, -1))
        return self.rho[sl], self.mx[sl], self.my[sl]


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    snapshot_times: tuple
    epsilon: float
    cfl: float = 0.4
    flux: str = "rusanov"
    integrator: str = "euler"  # "euler" | "ssp2"
    bc: str = "farfield"  # "farfield" | "periodic"
    reconstruction: str = "none"  # "none" | "muscl"
    floor_frac: float = 1e-10  # density floor = floor_frac * rho_inf

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(t < 0.0 or t > self.t_end for t in ts):
            raise ValueError("snapshot times must lie in [0, t_end]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if self.flux not in kernels.FLUX_IDS:
            raise ValueError(f"unknown flux {self.flux!r}")
        if self.integrator not in ("euler", "ssp2"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.bc not in ("farfield", "periodic"):
            raise ValueError(f"unknown bc {self.bc!r}")
        if self.reconstruction not in ("none", "muscl"):
            raise ValueError(f"unknown reconstruction {self.reconstruction!r}")
        if self.reconstruction == "muscl" and self.bc == "periodic":
            # slopes cannot wrap through the single ghost ring, which would
            # break the exact periodic flux balance
            raise ValueError("muscl reconstruction requires bc=farfield")
        object.__setattr__(self, "snapshot_times", ts)


@dataclass
class Trajectory:
    """Snapshots of one member plus its accumulated dissipation budget."""

    states: list
    epsilon: float
    dissipation_integral: float = 0.0
    dissipation_at_snapshots: list = field(default_factory=list)
    sup_relative_energy: float = 0.0
    floor_hits: int = 0
    blown_up: bool = False
    member_id: int = -1

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def field_arrays(self):
        """Stacked interior fields: (times, rho, mx, my) with shape (T, nx, ny)."""
        rho = np.stack([s.interior()[0] for s in self.states])
        mx = np.stack([s.interior()[1] for s in self.states])
        my = np.stack([s.interior()[2] for s in self.states])
        return self.times, rho, mx, my

    @staticmethod
    def from_fields(grid: Grid, far: FarField, times, rho_seq, mx_seq, my_seq, epsilon=0.0):
        """Build a synthetic trajectory from interior (nx, ny) field arrays."""
        states = []
        for t, r, mx, my in zip(times, rho_seq, mx_seq, my_seq):
            st = constant_state(grid, far, time=float(t))
            st.rho[1:-1, 1:-1] = r
            st.mx[1:-1, 1:-1] = mx
            st.my[1:-1, 1:-1] = my
            states.append(st)
        return Trajectory(states=states, epsilon=epsilon)


def constant_state(grid: Grid, far: FarField, time: float = 0.0) -> FluidState:
    """Uniform far-field state over the whole array, ghosts included."""
    shape = grid.shape_full
    minf = far.m_inf
    return FluidState(
        rho=np.full(shape, far.rho_inf),
        mx=np.full(shape, minf[0]),
        my=np.full(shape, minf[1]),
        time=time,
    )


def fill_ghosts(state: FluidState, grid: Grid, far: FarField, bc: str = "farfield") -> None:
    """Refresh the ghost ring: Dirichlet far field or periodic wrap."""
    nx, ny = grid.nx, grid.ny
    if bc == "farfield":
        minf = far.m_inf
        for arr, val in ((state.rho, far.rho_inf), (state.mx, minf[0]), (state.my, minf[1])):
            arr[0, :] = val
            arr[-1, :] = val
            arr[:, 0] = val
            arr[:, -1] = val
    elif bc == "periodic":
        for arr in (state.rho, state.mx, state.my):
            arr[0, :] = arr[nx, :]
            arr[nx + 1, :] = arr[1, :]
            arr[:, 0] = arr[:, ny]
            arr[:, ny + 1] = arr[:, 1]
    else:
        raise ValueError(f"unknown bc {bc!r}")


def velocity_fields(state: FluidState, grid: Grid, floor: float):
    """u = m / max(rho, floor), zeroed on solid cells.

    Returns (ux, uy, floor_hits) where floor_hits counts fluid cells whose
    density fell below the floor.
    """
    r = np.maximum(state.rho, floor)
    pos = r > 0.0
    rsafe = np.where(pos, r, 1.0)
    ux = np.where(pos, state.mx / rsafe, 0.0)
    uy = np.where(pos, state.my / rsafe, 0.0)
    solid = grid.mask == 1
    ux[solid] = 0.0
    uy[solid] = 0.0
    hits = int(np.count_nonzero((state.rho < floor) & (grid.mask == FLUID)))
    return ux, uy, hits


def state_fluxes(state: FluidState, grid: Grid, law: GasLaw, visc: ViscosityPair,
                 epsilon: float, flux: str = "rusanov", floor: float = 0.0,
                 reconstruction: str = "none"):
    """Face fluxes of the current state (public hook for flux-level oracles).

    Returns (Fx_mass, Fx_mx, Fx_my, Fy_mass, Fy_mx, Fy_my, smax).
    """
    ux, uy, _ = velocity_fields(state, grid, floor)
    recon_id = 1 if reconstruction == "muscl" else 0
    return kernels.face_fluxes(
        state.rho, state.mx, state.my, ux, uy, grid.mask,
        law.a, law.gamma, visc.mu, visc.lam, epsilon,
        grid.dx, grid.dy, floor, kernels.FLUX_IDS[flux], recon_id,
    )


def boundary_mass_flux(fluxes, grid: Grid) -> float:
    """Net outward mass flux through the outer-box faces."""
    Fx_mass, _, _, Fy_mass, _, _, _ = fluxes
    east_west = float(np.sum(Fx_mass[grid.nx, :] - Fx_mass[0, :])) * grid.dy
    north_south = float(np.sum(Fy_mass[:, grid.ny] - Fy_mass[:, 0])) * grid.dx
    return east_west + north_south


def total_mass(state: FluidState, grid: Grid) -> float:
    r = state.interior()[0]
    return float(np.sum(r[grid.fluid_interior])) * grid.cell_area


def max_wavespeed(state: FluidState, grid: Grid, law: GasLaw, floor: float) -> float:
    """max over fluid cells of |u| + c."""
    r, mx, my = state.interior()
    fl = grid.fluid_interior
    rr = np.maximum(r[fl], floor)
    speed = np.hypot(mx[fl], my[fl]) / rr + np.sqrt(law.a * law.gamma * r[fl] ** (law.gamma - 1.0))
    return float(np.max(speed)) if speed.size else 0.0


def stable_dt_bounds(state: FluidState, grid: Grid, law: GasLaw, visc: ViscosityPair,
                     epsilon: float, floor: float):
    """(advective, viscous) dt upper bounds at cfl = 1."""
    h = min(grid.dx, grid.dy)
    s = max_wavespeed(state, grid, law, floor)
    dt_adv = h / s if s > 0.0 else np.inf
    vmax = epsilon * max(visc.mu, visc.lam)
    if vmax > 0.0:
        r = state.interior()[0]
        rmin = float(np.min(np.maximum(r[grid.fluid_interior], floor)))
        dt_visc = h * h * rmin / (4.0 * vmax)
    else:
        dt_visc = np.inf
    return dt_adv, dt_visc


def velocity_gradient(state: FluidState, grid: Grid, floor: float = 0.0) -> np.ndarray:
    """Cell-centered grad u on interior cells, shape (nx, ny, 2, 2)."""
    ux, uy, _ = velocity_fields(state, grid, floor)
    G11, G12, G21, G22 = kernels.cell_gradients(ux, uy, grid.mask, grid.dx, grid.dy)
    G = np.empty(G11.shape + (2, 2))
    G[..., 0, 0] = G11
    G[..., 0, 1] = G12
    G[..., 1, 0] = G21
    G[..., 1, 1] = G22
    return G


def dissipation_rate(state: FluidState, grid: Grid, visc: ViscosityPair,
                     epsilon: float, floor: float = 0.0) -> float:
    """Instantaneous epsilon * integral of S(grad u):grad u over fluid cells.

    Exactly linear in epsilon, nonnegative by construction.
    """
    G = velocity_gradient(state, grid, floor)
    dens = stress_dissipation(visc, G)
    return epsilon * float(np.sum(dens[grid.fluid_interior])) * grid.cell_area


def relative_energy_integral(state: FluidState, grid: Grid, law: GasLaw, far: FarField) -> float:
    r, mx, my = state.interior()
    fl = grid.fluid_interior
    e = relative_energy(law, r[fl], mx[fl], my[fl], far)
    return float(np.sum(e)) * grid.cell_area


def _euler_stage(state, grid, law, visc, epsilon, dt, flux, bc, far, floor, source,
                 t_src, reconstruction="none"):
    fill_ghosts(state, grid, far, bc)
    fl = state_fluxes(state, grid, law, visc, epsilon, flux, floor, reconstruction)
    Fx_mass, Fx_mx, Fx_my, Fy_mass, Fy_mx, Fy_my, smax = fl

    h = min(grid.dx, grid.dy)
    if smax > 0.0 and dt > (h / smax) * (1.0 + 1e-9):
        raise CflViolation(f"dt={dt:g} exceeds advective bound {h / smax:g}")
    vmax = epsilon * max(visc.mu, visc.lam)
    if vmax > 0.0:
        r = state.interior()[0]
        rmin = float(np.min(np.maximum(r[grid.fluid_interior], floor)))
        bound = h * h * rmin / (4.0 * vmax)
        if dt > bound * (1.0 + 1e-9):
            raise CflViolation(f"dt={dt:g} exceeds viscous bound {bound:g}")

    new = state.copy()
    new.time = state.time + dt
    fluid = grid.fluid_interior
    cx = dt / grid.dx
    cy = dt / grid.dy
    upd = [
        (new.rho, Fx_mass, Fy_mass, 0),
        (new.mx, Fx_mx, Fy_mx, 1),
        (new.my, Fx_my, Fy_my, 2),
    ]
    if source is not None:
        src = source(t_src)
    for arr, Fx, Fy, k in upd:
        delta = -cx * (Fx[1:, :] - Fx[:-1, :]) - cy * (Fy[:, 1:] - Fy[:, :-1])
        if source is not None:
            delta = delta + dt * src[k]
        inner = arr[1:-1, 1:-1]
        inner[fluid] = inner[fluid] + delta[fluid]

    rint = new.interior()[0]
    rf = rint[fluid]
    if rf.size and float(np.min(rf)) < -floor:
        raise SolverBlowup("negative density beyond floor")
    np.clip(rint, 0.0, None, out=rint)
    if not (np.all(np.isfinite(rf)) and np.all(np.isfinite(new.interior()[1][fluid]))
            and np.all(np.isfinite(new.interior()[2][fluid]))):
        raise SolverBlowup("NaN detected")
    fill_ghosts(new, grid, far, bc)
    return new


def step(state: FluidState, grid: Grid, law: GasLaw, visc: ViscosityPair,
         epsilon: float, dt: float, far: FarField, flux: str = "rusanov",
         bc: str = "farfield", integrator: str = "euler", floor: float = 0.0,
         source: Optional[Callable[[float], tuple]] = None,
         reconstruction: str = "none") -> FluidState:
    """One conservative time step; raises on CFL violation or blow-up.

    `source(t)` may return (s_rho, s_mx, s_my) interior arrays added as
    dt * s (used by manufactured-solution verification).
    """
    if state.rho.shape != grid.shape_full:
        raise GridMismatchError("state does not match grid layout")
    if integrator == "euler":
        return _euler_stage(state, grid, law, visc, epsilon, dt, flux, bc, far,
                            floor, source, state.time, reconstruction)
    # SSP2 (Heun): average of the state and a doubly advanced state.
    s1 = _euler_stage(state, grid, law, visc, epsilon, dt, flux, bc, far,
                      floor, source, state.time, reconstruction)
    s2 = _euler_stage(s1, grid, law, visc, epsilon, dt, flux, bc, far,
                      floor, source, s1.time, reconstruction)
    out = state.copy()
    out.time = state.time + dt
    out.rho[...] = 0.5 * (state.rho + s2.rho)
    out.mx[...] = 0.5 * (state.mx + s2.mx)
    out.my[...] = 0.5 * (state.my + s2.my)
    fill_ghosts(out, grid, far, bc)
    return out


def solve(initial: FluidState, cfg: SolverConfig, grid: Grid, law: GasLaw,
          visc: ViscosityPair, far: FarField,
          source: Optional[Callable[[float], tuple]] = None) -> Trajectory:
    """Advance to t_end, recording snapshots and the dissipation budget.

    On blow-up the partial trajectory is returned with `blown_up` set.
    """
    floor = cfg.floor_frac * far.rho_inf
    state = initial.copy()
    fill_ghosts(state, grid, far, cfg.bc)

    traj = Trajectory(states=[], epsilon=cfg.epsilon)
    _, _, hits = velocity_fields(state, grid, floor)
    traj.floor_hits += hits
    traj.sup_relative_energy = relative_energy_integral(state, grid, law, far)
    if not np.isfinite(traj.sup_relative_energy):
        raise SolverBlowup("non-finite initial energy")
    rate_prev = dissipation_rate(state, grid, visc, cfg.epsilon, floor)

    remaining = list(cfg.snapshot_times)
    if remaining and remaining[0] == 0.0:
        traj.states.append(state.copy())
        traj.dissipation_at_snapshots.append(0.0)
        remaining.pop(0)

    events = sorted(set(remaining) | {cfg.t_end})
    tiny = 1e-13 * max(cfg.t_end, 1.0)
    steps = 0
    for target in events:
        while state.time < target - tiny:
            dt_adv, dt_visc = stable_dt_bounds(state, grid, law, visc, cfg.epsilon, floor)
            dt = min(cfg.cfl * dt_adv, cfg.cfl * dt_visc, target - state.time)
            if not np.isfinite(dt) or dt <= 0.0:
                raise SolverBlowup(f"degenerate time step dt={dt}")
            try:
                state = step(state, grid, law, visc, cfg.epsilon, dt, far,
                             flux=cfg.flux, bc=cfg.bc, integrator=cfg.integrator,
                             floor=floor, source=source,
                             reconstruction=cfg.reconstruction)
            except SolverBlowup:
                traj.blown_up = True
                return traj
            if abs(state.time - target) <= tiny:
                state.time = target
            rate = dissipation_rate(state, grid, visc, cfg.epsilon, floor)
            traj.dissipation_integral += 0.5 * (rate_prev + rate) * dt
            rate_prev = rate
            _, _, hits = velocity_fields(state, grid, floor)
            traj.floor_hits += hits
            e_int = relative_energy_integral(state, grid, law, far)
            if not np.isfinite(e_int):
                traj.blown_up = True
                return traj
            traj.sup_relative_energy = max(traj.sup_relative_energy, e_int)
            steps += 1
            if steps > _MAX_STEPS:
                raise SolverBlowup("step budget exhausted")
        if target in remaining:
            traj.states.append(state.copy())
            traj.dissipation_at_snapshots.append(traj.dissipation_integral)
    return traj
