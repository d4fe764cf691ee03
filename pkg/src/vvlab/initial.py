"""Initial-data families for ensemble members.

Families are config-selected; per-member randomness comes from a
counter-based generator seeded with base_seed XOR member index, so
members are reproducible independently of execution order.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grid import FarField, Grid
from .solver import FluidState, constant_state, fill_ghosts

FAMILIES = ("constant", "gaussian-bump", "shear-inflow")


def member_rng(base_seed: int, member: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=base_seed ^ member))


def gaussian_bump_state(grid: Grid, far: FarField, amplitude: float,
                        width: float, center=(0.0, 0.0)) -> FluidState:
    """Density bump rho_inf*(1 + A*exp(-r^2/w^2)) advected with u_inf."""
    st = constant_state(grid, far)
    X, Y = np.meshgrid(grid.xc, grid.yc, indexing="ij")
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    rho = far.rho_inf * (1.0 + amplitude * np.exp(-r2 / width**2))
    ux, uy = far.u_inf
    st.rho[...] = rho
    st.mx[...] = rho * ux
    st.my[...] = rho * uy
    fill_ghosts(st, grid, far)
    return st


def shear_inflow_state(grid: Grid, far: FarField, amplitude: float,
                       wavenumber: int, phase: float,
                       envelope_width: float | None = None) -> FluidState:
    """Far-field flow with a localized sinusoidal shear perturbation."""
    st = constant_state(grid, far)
    X, Y = np.meshgrid(grid.xc, grid.yc, indexing="ij")
    Ly = grid.y_max - grid.y_min
    if envelope_width is None:
        envelope_width = 0.25 * min(grid.x_max - grid.x_min, Ly)
    cx = 0.5 * (grid.x_min + grid.x_max)
    cy = 0.5 * (grid.y_min + grid.y_max)
    env = np.exp(-(((X - cx) ** 2 + (Y - cy) ** 2) / envelope_width**2))
    du = amplitude * np.sin(2.0 * np.pi * wavenumber * (Y - grid.y_min) / Ly + phase) * env
    ux, uy = far.u_inf
    st.mx[...] = st.rho * (ux + du)
    st.my[...] = st.rho * uy
    fill_ghosts(st, grid, far)
    return st


def make_member_state(family: str, grid: Grid, far: FarField,
                      rng: np.random.Generator | None, params: dict) -> FluidState:
    """Build one member's initial state; rng=None disables jitter (Dirac mode)."""
    if family == "constant":
        return constant_state(grid, far)
    if family == "gaussian-bump":
        amp = params.get("bump_amplitude", 0.2)
        width = params.get("bump_width", 0.3)
        center = np.array(params.get("bump_center", (0.0, 0.0)), dtype=float)
        if rng is not None:
            amp = amp * (1.0 + 0.3 * (rng.random() - 0.5))
            center = center + (rng.random(2) - 0.5) * width
        return gaussian_bump_state(grid, far, amp, width, center)
    if family == "shear-inflow":
        amp = params.get("shear_amplitude", 0.2)
        k = int(params.get("shear_wavenumber", 2))
        phase = 0.0
        if rng is not None:
            phase = float(rng.random() * 2.0 * np.pi)
        return shear_inflow_state(grid, far, amp, k, phase,
                                  params.get("shear_envelope_width"))
    raise ConfigError(f"unknown initial-data family {family!r}")
