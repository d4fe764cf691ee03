import numpy as np
import pytest
from scipy.integrate import quad

from vvlab.errors import GeometryError, SupportError
from vvlab.grid import GridConfig, ObstacleSpec, build_grid
from vvlab.testfns import (
    AngularKernel,
    ConvexProfile,
    ConvexProfileGradient,
    RadialLinear,
    ScalarBump,
    TimeWeight,
    VectorBump,
    check_support,
    check_time_support,
    cutoff_chi,
    cutoff_chi_prime,
    grid_points,
)


def fd_order(value_fn, exact_fn, pts, hs=(1e-3, 1e-4)):
    """Observed FD convergence order of the analytic first derivatives."""
    errs = []
    for h in hs:
        fd = np.empty(pts.shape[:-1] + exact_fn(pts).shape[len(pts.shape) - 1:])
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            diff = (value_fn(pts + dp) - value_fn(pts - dp)) / (2 * h)
            fd[..., j] = diff if diff.ndim == fd[..., j].ndim else diff
        errs.append(float(np.max(np.abs(fd - exact_fn(pts)))))
    return np.log10(errs[0] / errs[1]), errs


def test_scalar_bump_gradient_fd_order():
    bump = ScalarBump((0.3, -0.2), (0.7, 0.5), amplitude=2.0)
    rng = np.random.Generator(np.random.Philox(key=1))
    pts = np.stack([rng.uniform(-0.3, 0.9, 200), rng.uniform(-0.6, 0.2, 200)], axis=-1)
    order, errs = fd_order(bump.value, bump.grad, pts)
    assert order >= 1.9, (order, errs)


def test_scalar_bump_hessian_fd_order():
    bump = ScalarBump((0.0, 0.0), 0.8)
    rng = np.random.Generator(np.random.Philox(key=2))
    pts = rng.uniform(-0.5, 0.5, size=(200, 2))
    errs = []
    for h in (1e-3, 1e-4):
        fd = np.empty(pts.shape[:-1] + (2, 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            fd[..., :, j] = (bump.grad(pts + dp) - bump.grad(pts - dp)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - bump.hess(pts)))))
    assert np.log10(errs[0] / errs[1]) >= 1.9


def test_bump_compact_support_is_exact():
    bump = ScalarBump((0.0, 0.0), 0.5)
    pts = np.array([[0.5, 0.0], [0.7, 0.0], [0.0, -0.51], [3.0, 3.0]])
    assert np.all(bump.value(pts) == 0.0)
    assert np.all(bump.grad(pts) == 0.0)


def _ring_points(rng, n, r_lo, r_hi, x0=(0.0, 0.0)):
    r = rng.uniform(r_lo, r_hi, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return np.stack([x0[0] + r * np.cos(th), x0[1] + r * np.sin(th)], axis=-1)


def test_profile_gradient_jacobian_fd():
    prof = ConvexProfile(r0=0.5, fbar=1.7)
    fn = ConvexProfileGradient(prof, (0.1, -0.2), L=1.4)
    rng = np.random.Generator(np.random.Philox(key=3))
    # stay clear of the ramp/cutoff joins at r = 0.5, 1.118, 1.4, 2.8
    pts = np.concatenate([
        _ring_points(rng, 100, 0.55, 1.05, (0.1, -0.2)),
        _ring_points(rng, 100, 1.5, 2.6, (0.1, -0.2)),
    ])
    errs = []
    for h in (1e-3, 1e-4):
        fd = np.empty(pts.shape[:-1] + (2, 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            fd[..., :, j] = (fn.value(pts + dp) - fn.value(pts - dp)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - fn.jacobian(pts)))))
    assert np.log10(errs[0] / errs[1]) >= 1.9, errs


def test_profile_gradient_component_hessian_fd():
    prof = ConvexProfile(r0=0.4, fbar=1.0)
    fn = ConvexProfileGradient(prof, (0.0, 0.0), L=1.2)
    rng = np.random.Generator(np.random.Philox(key=4))
    pts = _ring_points(rng, 150, 0.5, 1.0)
    errs = []
    for h in (1e-3, 1e-4):
        fd = np.empty(pts.shape[:-1] + (2, 2, 2))
        for k in range(2):
            dp = np.zeros(2)
            dp[k] = h
            fd[..., :, :, k] = (fn.jacobian(pts + dp) - fn.jacobian(pts - dp)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - fn.component_hessian(pts)))))
    assert np.log10(errs[0] / errs[1]) >= 1.9, errs


def test_radial_linear_jacobian_fd():
    fn = RadialLinear((0.2, 0.1), L=0.8)
    rng = np.random.Generator(np.random.Philox(key=5))
    pts = np.concatenate([
        _ring_points(rng, 80, 0.1, 0.75, (0.2, 0.1)),
        _ring_points(rng, 80, 0.85, 1.55, (0.2, 0.1)),
    ])
    errs = []
    for h in (1e-3, 1e-4):
        fd = np.empty(pts.shape[:-1] + (2, 2))
        for j in range(2):
            dp = np.zeros(2)
            dp[j] = h
            fd[..., :, j] = (fn.value(pts + dp) - fn.value(pts - dp)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - fn.jacobian(pts)))))
    assert np.log10(errs[0] / errs[1]) >= 1.9, errs


def test_vector_bump_divergence_consistent():
    fn = VectorBump((0.1, 0.0), 0.6, (0.6, 0.8))
    rng = np.random.Generator(np.random.Philox(key=6))
    pts = rng.uniform(-0.4, 0.6, size=(100, 2))
    J = fn.jacobian(pts)
    assert np.allclose(fn.divergence(pts), J[..., 0, 0] + J[..., 1, 1], atol=0.0)
    H = fn.component_hessian(pts)
    assert np.allclose(H, np.swapaxes(H, -1, -2), atol=0.0)


def test_convex_profile_shape():
    prof = ConvexProfile(r0=0.6, fbar=2.5)
    z = np.linspace(0.0, 3.0, 400)
    fp = prof.fprime(z)
    assert np.all(fp[z <= 0.36] == 0.0)
    assert np.all(fp <= 2.5 + 1e-15)
    assert np.all(fp[z >= 0.36 + 1.0] == 2.5)
    ramp = (z > 0.36) & (z < 1.36)
    assert np.all(fp[ramp] > 0.0)
    assert np.all(prof.fsecond(z) >= 0.0)  # convexity
    # F equals the quadrature of F' (independent oracle; the profile has
    # joins at r0^2 and r0^2 + 1 that quad should subdivide at)
    joins = [0.36, 1.36]
    for zz in (0.2, 0.7, 1.5, 2.9):
        pts = [p for p in joins if p < zz]
        val, _ = quad(lambda s: float(prof.fprime(s)), 0.0, zz,
                      points=pts or None, limit=200)
        assert prof.f(zz) == pytest.approx(val, abs=1e-10)


def test_cutoff_chi_shape():
    z = np.linspace(0.0, 3.0, 301)
    chi = cutoff_chi(z)
    assert np.all(chi[z <= 1.0] == 1.0)
    assert np.all(chi[z >= 2.0] == 0.0)
    mid = (z > 1.0) & (z < 2.0)
    assert np.all(np.diff(chi[mid]) <= 0.0)
    assert np.all(cutoff_chi_prime(z) <= 0.0)


def test_profile_gradient_requires_L_at_least_r0():
    prof = ConvexProfile(r0=1.0, fbar=1.0)
    with pytest.raises(GeometryError):
        ConvexProfileGradient(prof, (0.0, 0.0), L=0.5)


def test_angular_kernel_matrix_and_quadratic():
    k = AngularKernel((0.0, 0.0))
    pts = np.array([[0.0, 1.0]])
    J = k.matrix(pts)[0]
    assert np.allclose(J, [[1.0, 0.0], [0.0, 0.0]])
    # m = e1, y = e2: |m.y|^2 = 0 and (J m).m = 1, |y|^2|m|^2 = 1
    assert k.quadratic(pts, 1.0, 0.0)[0] == pytest.approx(1.0)
    rng = np.random.Generator(np.random.Philox(key=8))
    pts = rng.normal(size=(2000, 2))
    x0 = rng.normal(size=2)
    kk = AngularKernel(tuple(x0))
    J = kk.matrix(pts)
    assert np.array_equal(J, np.swapaxes(J, -1, -2))
    half = 0.5 * (J[..., 0, 0] + J[..., 1, 1])
    rad = np.sqrt((0.5 * (J[..., 0, 0] - J[..., 1, 1])) ** 2 + J[..., 0, 1] ** 2)
    assert float(np.min(half - rad)) >= -1e-14


def test_time_weight_support_and_derivative():
    psi = TimeWeight(0.2, 0.8)
    t = np.linspace(0.0, 1.0, 101)
    v = psi.value(t)
    assert np.all(v[(t <= 0.2) | (t >= 0.8)] == 0.0)
    assert np.max(v) <= 1.0
    ts = np.linspace(0.25, 0.75, 50)
    for h in (1e-5,):
        fd = (psi.value(ts + h) - psi.value(ts - h)) / (2 * h)
        assert np.allclose(fd, psi.derivative(ts), atol=1e-6)
    check_time_support(psi, 0.0, 1.0)
    with pytest.raises(SupportError):
        check_time_support(psi, 0.3, 1.0)


def test_check_support_against_obstacle():
    grid = build_grid(GridConfig(
        nx=32, ny=32, x_min=-2, x_max=2, y_min=-2, y_max=2,
        obstacle=ObstacleSpec(kind="disc", center=(0.0, 0.0), radius=0.5),
    ))
    check_support(ScalarBump((1.2, 1.2), 0.5), grid)  # clear of everything
    with pytest.raises(SupportError):
        check_support(ScalarBump((0.6, 0.0), 0.4), grid)  # reaches the disc
    with pytest.raises(SupportError):
        check_support(ScalarBump((1.9, 0.0), 0.5), grid)  # leaves the box
    # profile-gradient field vanishes on the obstacle by construction
    prof = ConvexProfile(r0=0.8, fbar=1.0)
    check_support(ConvexProfileGradient(prof, (0.0, 0.0), L=0.9), grid)


def test_grid_points_shape(grid_plain):
    pts = grid_points(grid_plain)
    assert pts.shape == (16, 16, 2)
    assert pts[0, 0, 0] == pytest.approx(grid_plain.x_min + 0.5 * grid_plain.dx)
