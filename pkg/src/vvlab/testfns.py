"""Compactly supported smooth test functions with analytic derivatives.

Spatial functions are evaluated at point arrays of shape (..., 2); the
state-space bump reuses the same profile in (rho, mx, my). Derivatives
are closed-form throughout, never finite-differenced; the validation
suite checks them against central differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GeometryError, SupportError
from .grid import FLUID, Grid


# ---------------------------------------------------------------------------
# Smoothstep pieces shared by the convex profile and the cutoff.


def smoothstep(t):
    """s(t) = 3t^2 - 2t^3 clamped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def smoothstep_prime(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 6.0 * t * (1.0 - t), 0.0)


def smoothstep_second(t):
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 6.0 - 12.0 * np.clip(t, 0.0, 1.0), 0.0)


def smoothstep_integral(t):
    """Integral of s from 0 to t (t clamped; linear growth beyond 1)."""
    tc = np.clip(t, 0.0, 1.0)
    base = tc**3 - 0.5 * tc**4
    return base + np.where(t > 1.0, t - 1.0, 0.0)


def cutoff_chi(z):
    """chi = 1 on [0,1], mirrored smoothstep down to 0 on [1,2]."""
    return 1.0 - smoothstep(np.asarray(z, dtype=float) - 1.0)


def cutoff_chi_prime(z):
    return -smoothstep_prime(np.asarray(z, dtype=float) - 1.0)


def cutoff_chi_second(z):
    return -smoothstep_second(np.asarray(z, dtype=float) - 1.0)


@dataclass(frozen=True)
class ConvexProfile:
    """Convex F with F = 0 on [0, r0^2], ramping slope, then slope fbar.

    F'(z) = fbar * s(z - r0^2) with the cubic smoothstep s, so F is C^2,
    F'' >= 0 everywhere and F' = fbar for z >= r0^2 + 1.
    """

    r0: float
    fbar: float = 1.0

    def __post_init__(self):
        if self.r0 < 0.0 or self.fbar <= 0.0:
            raise GeometryError("profile needs r0 >= 0 and fbar > 0")

    def f(self, z):
        return self.fbar * smoothstep_integral(np.asarray(z, dtype=float) - self.r0**2)

    def fprime(self, z):
        return self.fbar * smoothstep(np.asarray(z, dtype=float) - self.r0**2)

    def fsecond(self, z):
        return self.fbar * smoothstep_prime(np.asarray(z, dtype=float) - self.r0**2)

    def fthird(self, z):
        return self.fbar * smoothstep_second(np.asarray(z, dtype=float) - self.r0**2)


# ---------------------------------------------------------------------------
# The C-infinity bump profile g(z) = exp(1 - 1/(1 - z)) for z < 1.


def _bump_pieces(z):
    """g, g', g'' of the bump profile; all exactly zero for z >= 1."""
    z = np.asarray(z, dtype=float)
    inside = z < 1.0 - 1e-14
    zs = np.where(inside, z, 0.0)
    inv = 1.0 / (1.0 - zs)
    g = np.where(inside, np.exp(1.0 - inv), 0.0)
    hp = -(inv**2)
    hpp = -2.0 * inv**3
    gp = np.where(inside, g * hp, 0.0)
    gpp = np.where(inside, g * (hpp + hp**2), 0.0)
    return g, gp, gpp


class ScalarBump:
    """amplitude * g(sum ((x_i-c_i)/r_i)^2) in any dimension."""

    def __init__(self, center: Sequence[float], radii, amplitude: float = 1.0):
        self.center = np.asarray(center, dtype=float)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), self.center.shape)
        if np.any(radii <= 0.0):
            raise GeometryError("bump radii must be positive")
        self.radii = radii.copy()
        self.amplitude = float(amplitude)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def support_box(self) -> np.ndarray:
        """(dim, 2) array of [lo, hi] per axis."""
        return np.stack([self.center - self.radii, self.center + self.radii], axis=1)

    def _z(self, pts):
        pts = np.asarray(pts, dtype=float)
        w = (pts - self.center) / self.radii
        return pts, np.sum(w * w, axis=-1)

    def value(self, pts):
        _, z = self._z(pts)
        g, _, _ = _bump_pieces(z)
        return self.amplitude * g

    def grad(self, pts):
        pts, z = self._z(pts)
        _, gp, _ = _bump_pieces(z)
        zi = 2.0 * (pts - self.center) / self.radii**2
        return self.amplitude * gp[..., None] * zi

    def hess(self, pts):
        pts, z = self._z(pts)
        _, gp, gpp = _bump_pieces(z)
        zi = 2.0 * (pts - self.center) / self.radii**2
        outer = zi[..., :, None] * zi[..., None, :]
        diag = np.zeros(outer.shape)
        idx = np.arange(self.dim)
        diag[..., idx, idx] = 2.0 / self.radii**2
        return self.amplitude * (gpp[..., None, None] * outer + gp[..., None, None] * diag)


class VectorBump:
    """Scalar bump times a constant unit direction."""

    kind = "tensor-bump"

    def __init__(self, center, radii, direction, amplitude: float = 1.0):
        self.scalar = ScalarBump(center, radii, amplitude)
        d = np.asarray(direction, dtype=float)
        self.direction = d / np.linalg.norm(d)

    @property
    def support_box(self):
        return self.scalar.support_box

    def value(self, pts):
        return self.scalar.value(pts)[..., None] * self.direction

    def jacobian(self, pts):
        """J[..., i, j] = d phi_i / d x_j."""
        g = self.scalar.grad(pts)
        return self.direction[:, None] * g[..., None, :]

    def divergence(self, pts):
        return np.sum(self.scalar.grad(pts) * self.direction, axis=-1)

    def component_hessian(self, pts):
        """H[..., i, j, k] = d^2 phi_i / dx_j dx_k."""
        h = self.scalar.hess(pts)
        return self.direction[:, None, None] * h[..., None, :, :]


class ConvexProfileGradient:
    """phi(x) = chi(|x-x0|/L) * grad F(|x-x0|^2), the obstacle-pairing field."""

    kind = "convex-profile-gradient"

    def __init__(self, profile: ConvexProfile, x0, L: float):
        if L < profile.r0:
            raise GeometryError("cutoff scale L must be >= profile radius r0")
        self.profile = profile
        self.x0 = np.asarray(x0, dtype=float)
        self.L = float(L)

    @property
    def support_box(self):
        lo = self.x0 - 2.0 * self.L
        hi = self.x0 + 2.0 * self.L
        return np.stack([lo, hi], axis=1)

    def _geom(self, pts):
        y = np.asarray(pts, dtype=float) - self.x0
        r = np.sqrt(np.sum(y * y, axis=-1))
        z = r * r
        return y, r, z

    def value(self, pts):
        y, r, z = self._geom(pts)
        c = cutoff_chi(r / self.L)
        return (c * 2.0 * self.profile.fprime(z))[..., None] * y

    def jacobian(self, pts):
        y, r, z = self._geom(pts)
        p = self.profile
        c = cutoff_chi(r / self.L)
        A = 2.0 * p.fprime(z)
        # chi'(r/L)/ (r L), safe: chi' vanishes for r <= L
        rs = np.where(r > 0.0, r, 1.0)
        cr = np.where(r > 0.0, cutoff_chi_prime(r / self.L) / (rs * self.L), 0.0)
        eye = np.eye(2)
        J = cr[..., None, None] * A[..., None, None] * y[..., :, None] * y[..., None, :]
        J = J + c[..., None, None] * (
            4.0 * p.fsecond(z)[..., None, None] * y[..., :, None] * y[..., None, :]
            + A[..., None, None] * eye
        )
        return J

    def divergence(self, pts):
        J = self.jacobian(pts)
        return J[..., 0, 0] + J[..., 1, 1]

    def hessian_part(self, pts):
        """chi * (4F''(y x y) + 2F' I): the term kept by the convex pairing."""
        y, r, z = self._geom(pts)
        p = self.profile
        c = cutoff_chi(r / self.L)
        eye = np.eye(2)
        return c[..., None, None] * (
            4.0 * p.fsecond(z)[..., None, None] * y[..., :, None] * y[..., None, :]
            + 2.0 * p.fprime(z)[..., None, None] * eye
        )

    def cutoff_part(self, pts):
        """The (1/L) chi' remainder supported on the L <= |y| <= 2L annulus."""
        y, r, z = self._geom(pts)
        A = 2.0 * self.profile.fprime(z)
        rs = np.where(r > 0.0, r, 1.0)
        cr = np.where(r > 0.0, cutoff_chi_prime(r / self.L) / (rs * self.L), 0.0)
        return cr[..., None, None] * A[..., None, None] * y[..., :, None] * y[..., None, :]

    def component_hessian(self, pts):
        y, r, z = self._geom(pts)
        p = self.profile
        c = cutoff_chi(r / self.L)
        A = 2.0 * p.fprime(z)
        F2 = p.fsecond(z)
        F3 = p.fthird(z)
        rs = np.where(r > 0.0, r, 1.0)
        chip = cutoff_chi_prime(r / self.L)
        chipp = cutoff_chi_second(r / self.L)
        cj = np.where(r > 0.0, chip / (rs * self.L), 0.0)  # d chi / dx_j = cj * y_j
        eye = np.eye(2)
        yi = y[..., :, None, None]
        yj = y[..., None, :, None]
        yk = y[..., None, None, :]
        d_ij = eye[:, :, None]
        d_ik = eye[:, None, :]
        d_jk = eye[None, :, :]
        # d/dx_k of cj*y_j = [chi''/(r^2 L^2) - chi'/(r^3 L)] y_j y_k + cj d_jk
        ckj = np.where(
            r > 0.0,
            chipp / (rs * rs * self.L * self.L) - chip / (rs**3 * self.L),
            0.0,
        )
        H = (
            (ckj[..., None, None, None] * yj * yk + cj[..., None, None, None] * d_jk)
            * A[..., None, None, None]
            * yi
        )
        H = H + cj[..., None, None, None] * (
            4.0 * F2[..., None, None, None] * yk * yj * yi
            + A[..., None, None, None] * (yj * d_ik + yk * d_ij)
        )
        H = H + c[..., None, None, None] * (
            8.0 * F3[..., None, None, None] * yi * yj * yk
            + 4.0
            * F2[..., None, None, None]
            * (d_jk * yi + d_ik * yj + d_ij * yk)
        )
        return H


class RadialLinear:
    """phi(x) = chi(|x-x0|/L) * (x-x0); the far-field drift test field."""

    kind = "radial-linear"

    def __init__(self, x0, L: float):
        if L <= 0.0:
            raise GeometryError("cutoff scale L must be positive")
        self.x0 = np.asarray(x0, dtype=float)
        self.L = float(L)

    @property
    def support_box(self):
        lo = self.x0 - 2.0 * self.L
        hi = self.x0 + 2.0 * self.L
        return np.stack([lo, hi], axis=1)

    def value(self, pts):
        y = np.asarray(pts, dtype=float) - self.x0
        r = np.sqrt(np.sum(y * y, axis=-1))
        return cutoff_chi(r / self.L)[..., None] * y

    def jacobian(self, pts):
        y = np.asarray(pts, dtype=float) - self.x0
        r = np.sqrt(np.sum(y * y, axis=-1))
        c = cutoff_chi(r / self.L)
        rs = np.where(r > 0.0, r, 1.0)
        cr = np.where(r > 0.0, cutoff_chi_prime(r / self.L) / (rs * self.L), 0.0)
        eye = np.eye(2)
        return (
            cr[..., None, None] * y[..., :, None] * y[..., None, :]
            + c[..., None, None] * eye
        )

    def divergence(self, pts):
        J = self.jacobian(pts)
        return J[..., 0, 0] + J[..., 1, 1]

    def component_hessian(self, pts):
        y = np.asarray(pts, dtype=float) - self.x0
        r = np.sqrt(np.sum(y * y, axis=-1))
        rs = np.where(r > 0.0, r, 1.0)
        chip = cutoff_chi_prime(r / self.L)
        chipp = cutoff_chi_second(r / self.L)
        cj = np.where(r > 0.0, chip / (rs * self.L), 0.0)
        ckj = np.where(
            r > 0.0,
            chipp / (rs * rs * self.L * self.L) - chip / (rs**3 * self.L),
            0.0,
        )
        eye = np.eye(2)
        yi = y[..., :, None, None]
        yj = y[..., None, :, None]
        yk = y[..., None, None, :]
        d_ij = eye[:, :, None]
        d_ik = eye[:, None, :]
        d_jk = eye[None, :, :]
        H = (ckj[..., None, None, None] * yj * yk + cj[..., None, None, None] * d_jk) * yi
        H = H + cj[..., None, None, None] * (yj * d_ik + yk * d_ij)
        return H


class TimeWeight:
    """C-infinity bump in time on (t0, t1) with analytic derivative."""

    def __init__(self, t0: float, t1: float, amplitude: float = 1.0):
        if not t1 > t0:
            raise GeometryError("time window must have t1 > t0")
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.amplitude = float(amplitude)

    def value(self, t):
        s = (2.0 * np.asarray(t, dtype=float) - (self.t0 + self.t1)) / (self.t1 - self.t0)
        g, _, _ = _bump_pieces(s * s)
        return self.amplitude * g

    def derivative(self, t):
        s = (2.0 * np.asarray(t, dtype=float) - (self.t0 + self.t1)) / (self.t1 - self.t0)
        _, gp, _ = _bump_pieces(s * s)
        dsdt = 2.0 / (self.t1 - self.t0)
        return self.amplitude * gp * 2.0 * s * dsdt


@dataclass(frozen=True)
class AngularKernel:
    """J_x0(x) = |x-x0|^2 I - (x-x0) x (x-x0); symmetric PSD field."""

    x0: tuple

    def matrix(self, pts) -> np.ndarray:
        y = np.asarray(pts, dtype=float) - np.asarray(self.x0, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        eye = np.eye(2)
        return r2[..., None, None] * eye - y[..., :, None] * y[..., None, :]

    def quadratic(self, pts, mx, my) -> np.ndarray:
        """(J m) . m = |y|^2 |m|^2 - (y . m)^2."""
        y = np.asarray(pts, dtype=float) - np.asarray(self.x0, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        dot = y[..., 0] * mx + y[..., 1] * my
        return r2 * (mx**2 + my**2) - dot**2


# ---------------------------------------------------------------------------
# Grid hooks


def grid_points(grid: Grid) -> np.ndarray:
    """Interior cell centers stacked as (nx, ny, 2)."""
    X, Y = grid.interior_centers()
    return np.stack([X, Y], axis=-1)


def check_support(fn, grid: Grid) -> None:
    """Reject test functions whose support reaches solid or ghost cells.

    The support box must sit inside the domain box and the function must
    vanish identically at every solid cell center.
    """
    box = fn.support_box
    tol = 1e-12 * max(grid.x_max - grid.x_min, grid.y_max - grid.y_min)
    if (
        box[0, 0] < grid.x_min - tol
        or box[0, 1] > grid.x_max + tol
        or box[1, 0] < grid.y_min - tol
        or box[1, 1] > grid.y_max + tol
    ):
        raise SupportError("support box extends beyond the domain box")
    solid = grid.mask[1:-1, 1:-1] == 1
    if np.any(solid):
        pts = grid_points(grid)[solid]
        val = fn.value(pts)
        if np.any(np.abs(val) > 0.0):
            raise SupportError("test function is nonzero on solid cells")


def check_time_support(psi: TimeWeight, t_min: float, t_max: float) -> None:
    tol = 1e-12 * max(abs(t_max), 1.0)
    if psi.t0 < t_min - tol or psi.t1 > t_max + tol:
        raise SupportError("time weight support exceeds the trajectory window")
