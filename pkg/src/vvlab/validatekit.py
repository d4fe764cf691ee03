"""Self-contained validation checks behind the `validate` subcommand.

These are quick deterministic oracles (seeded randomness only): analytic
derivatives vs central differences, algebraic identities, exact solver
steady states, kernel-backend agreement, and mask bookkeeping.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .grid import FarField, GridConfig, ObstacleSpec, annulus_cells, build_grid
from .initial import gaussian_bump_state
from .solver import (
    SolverConfig,
    boundary_mass_flux,
    constant_state,
    solve,
    state_fluxes,
    step,
    total_mass,
)
from .testfns import (
    AngularKernel,
    ConvexProfile,
    ConvexProfileGradient,
    RadialLinear,
    ScalarBump,
)
from .thermo import (
    GasLaw,
    ViscosityPair,
    calibrate_coercivity,
    coercivity_gap,
    pressure,
    pressure_potential,
    relative_energy,
    relative_energy_bregman,
)


def _default_grid():
    return build_grid(GridConfig(
        nx=24, ny=24, x_min=-2.0, x_max=2.0, y_min=-2.0, y_max=2.0,
        obstacle=ObstacleSpec(kind="disc", center=(0.0, 0.0), radius=0.4),
    ))


def _fd_jacobian(fn, pts, h):
    out = np.empty(pts.shape[:-1] + (2, 2))
    for j in range(2):
        dp = np.zeros(2)
        dp[j] = h
        out[..., :, j] = (fn.value(pts + dp) - fn.value(pts - dp)) / (2 * h)
    return out


def _fd_grad(fn, pts, h):
    out = np.empty(pts.shape)
    for j in range(2):
        dp = np.zeros(2)
        dp[j] = h
        out[..., j] = (fn.value(pts + dp) - fn.value(pts - dp)) / (2 * h)
    return out


def check_testfn_derivatives():
    rng = np.random.Generator(np.random.Philox(key=7))
    bump = ScalarBump((0.2, -0.1), (0.8, 0.6))
    pts = rng.uniform(-0.6, 0.6, size=(64, 2)) + np.array([0.2, -0.1])
    errs = []
    for h in (1e-3, 1e-4):
        fd = _fd_grad(bump, pts, h)
        errs.append(float(np.max(np.abs(fd - bump.grad(pts)))))
    order = np.log10(errs[0] / errs[1]) if errs[1] > 0 else 2.0
    ok = order >= 1.9
    prof = ConvexProfile(r0=0.5, fbar=2.0)
    cpg = ConvexProfileGradient(prof, (0.0, 0.0), L=1.5)
    r = rng.uniform(0.75, 1.05, size=128)
    th = rng.uniform(0.0, 2.0 * np.pi, size=128)
    pts2 = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    fd = _fd_jacobian(cpg, pts2, 1e-5)
    err2 = float(np.max(np.abs(fd - cpg.jacobian(pts2))))
    ok = ok and err2 < 1e-6
    rl = RadialLinear((0.0, 0.0), L=0.9)
    r = rng.uniform(1.0, 1.7, size=128) * 0.9
    pts3 = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    fd3 = _fd_jacobian(rl, pts3, 1e-5)
    err3 = float(np.max(np.abs(fd3 - rl.jacobian(pts3))))
    ok = ok and err3 < 1e-6
    return ok, f"grad errs {errs}, profile-grad jac err {err2:.2e}, radial jac err {err3:.2e}"


def check_angular_kernel():
    rng = np.random.Generator(np.random.Philox(key=11))
    pts = rng.normal(size=(4096, 2))
    k = AngularKernel((0.3, -0.7))
    J = k.matrix(pts)
    sym = float(np.max(np.abs(J - np.swapaxes(J, -1, -2))))
    half = 0.5 * (J[..., 0, 0] + J[..., 1, 1])
    rad = np.sqrt((0.5 * (J[..., 0, 0] - J[..., 1, 1])) ** 2 + J[..., 0, 1] ** 2)
    min_eig = float(np.min(half - rad))
    ok = sym == 0.0 and min_eig >= -1e-14
    return ok, f"symmetry defect {sym:g}, min eigenvalue {min_eig:.2e}"


def check_thermo_identities():
    rng = np.random.Generator(np.random.Philox(key=13))
    law = GasLaw(a=0.7, gamma=1.4)
    far = FarField(rho_inf=1.3, u_inf=(0.4, -0.2))
    rho = rng.uniform(0.01, 6.0, size=20000)
    mx = rng.normal(size=20000) * 3.0
    my = rng.normal(size=20000) * 3.0
    direct = relative_energy(law, rho, mx, my, far)
    breg = relative_energy_bregman(law, rho, mx, my, far)
    rel = np.max(np.abs(direct - breg) / np.maximum(np.abs(direct), 1e-30))
    p_err = np.max(np.abs(pressure(law, rho) - (law.gamma - 1.0)
                          * pressure_potential(law, rho))
                   / np.maximum(pressure(law, rho), 1e-300))
    ok = rel < 1e-12 and p_err < 1e-13
    return bool(ok), f"bregman rel err {rel:.2e}, p=(g-1)P rel err {p_err:.2e}"


def check_coercivity():
    law = GasLaw(a=1.0, gamma=1.4)
    far = FarField(rho_inf=1.0, u_inf=(0.0, 0.0))
    cert = calibrate_coercivity(law, far, n_rho=120, n_m=120, n_angle=1)
    rng = np.random.Generator(np.random.Philox(key=17))
    rho = rng.uniform(0.0, cert.rho_max, size=50000)
    ang = rng.uniform(0.0, 2 * np.pi, size=50000)
    mag = rng.uniform(0.0, cert.m_max, size=50000)
    gap = coercivity_gap(law, rho, mag * np.cos(ang), mag * np.sin(ang), far, cert)
    worst = float(np.min(gap))
    return worst >= 0.0, f"c = {cert.c:.4g}, min gap {worst:.2e}"


def check_steady_state():
    grid = build_grid(GridConfig(nx=12, ny=12, x_min=-1, x_max=1, y_min=-1, y_max=1))
    law = GasLaw(a=1.0, gamma=1.4)
    visc = ViscosityPair(mu=1.0, lam=0.5)
    far = FarField(rho_inf=1.0, u_inf=(0.3, 0.1))
    st = constant_state(grid, far)
    new = step(st, grid, law, visc, 0.05, 1e-3, far)
    drift = max(
        float(np.max(np.abs(new.rho - st.rho))),
        float(np.max(np.abs(new.mx - st.mx))),
        float(np.max(np.abs(new.my - st.my))),
    )
    return drift == 0.0, f"constant-state drift {drift:g}"


def check_mass_telescoping():
    grid = build_grid(GridConfig(nx=16, ny=12, x_min=-1, x_max=1, y_min=-1, y_max=1))
    law = GasLaw(a=1.0, gamma=1.4)
    visc = ViscosityPair(mu=1.0, lam=0.0)
    far = FarField(rho_inf=1.0, u_inf=(0.2, 0.0))
    st = gaussian_bump_state(grid, far, amplitude=0.3, width=0.4)
    st.time = 0.0
    fl = state_fluxes(st, grid, law, visc, 0.05, "rusanov", 1e-10)
    bnd = boundary_mass_flux(fl, grid)
    dt = 5e-4
    new = step(st, grid, law, visc, 0.05, dt, far, bc="periodic")
    dm = total_mass(new, grid) - total_mass(st, grid)
    # periodic wrap: reference flux balance must telescope to zero exactly
    err = abs(dm)
    return err < 1e-12, f"periodic mass drift {err:.2e} (farfield bnd flux {bnd:.3e})"


def check_backend_agreement():
    try:
        numba_mod = kernels.get_backend("numba")
    except Exception as exc:  # numba missing or failed to compile
        return True, f"numba unavailable ({exc}); fallback in use"
    numpy_mod = kernels.get_backend("numpy")
    grid = _default_grid()
    law = GasLaw(a=1.0, gamma=1.4)
    far = FarField(rho_inf=1.0, u_inf=(0.4, 0.0))
    st = gaussian_bump_state(grid, far, amplitude=0.25, width=0.5)
    from .solver import velocity_fields

    ux, uy, _ = velocity_fields(st, grid, 1e-10)
    args = (st.rho, st.mx, st.my, ux, uy, grid.mask, 1.0, 1.4, 1.0, 0.5, 0.05,
            grid.dx, grid.dy, 1e-10, kernels.RUSANOV)
    a = numba_mod.face_fluxes(*args)
    b = numpy_mod.face_fluxes(*args)
    worst = 0.0
    for x, y in zip(a[:-1], b[:-1]):
        denom = np.maximum(np.abs(y), 1.0)
        worst = max(worst, float(np.max(np.abs(x - y) / denom)))
    worst = max(worst, abs(a[-1] - b[-1]))
    return worst < 1e-13, f"max backend deviation {worst:.2e}"


def check_mask_bookkeeping():
    grid = _default_grid()
    counts = grid.counts()
    total = counts["fluid"] + counts["solid"] + counts["ghost"]
    ok = total == (grid.nx + 2) * (grid.ny + 2)
    r1 = annulus_cells(grid, (0.0, 0.0), 0.3)
    r2 = annulus_cells(grid, (0.0, 0.0), 0.7)
    overlap = np.count_nonzero(r1.cells & r2.cells)
    ok = ok and overlap == 0
    return ok, f"counts {counts}, disjoint annuli overlap {overlap}"


def check_kinetic_angular_identity():
    rng = np.random.Generator(np.random.Philox(key=23))
    pts = rng.normal(size=(100000, 2)) * 2.0
    mx = rng.normal(size=100000) * 3.0
    my = rng.normal(size=100000) * 3.0
    x0 = (0.5, -1.0)
    k = AngularKernel(x0)
    y = pts - np.array(x0)
    dot = y[:, 0] * mx + y[:, 1] * my
    lhs = dot**2 + k.quadratic(pts, mx, my)
    rhs = np.sum(y * y, axis=1) * (mx**2 + my**2)
    scale = float(np.max(np.abs(rhs)))
    slack = float(np.max(np.abs(lhs - rhs)))
    return slack <= 1e-12 * scale, f"identity slack {slack:.2e} (scale {scale:.2e})"


CHECKS = [
    ("testfn-derivatives", check_testfn_derivatives),
    ("angular-kernel", check_angular_kernel),
    ("thermo-identities", check_thermo_identities),
    ("coercivity-gap", check_coercivity),
    ("steady-state", check_steady_state),
    ("mass-telescoping", check_mass_telescoping),
    ("backend-agreement", check_backend_agreement),
    ("mask-bookkeeping", check_mask_bookkeeping),
    ("kinetic-angular-identity", check_kinetic_angular_identity),
]


def run_all(cfg=None) -> list:
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a failing oracle is a failing check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
