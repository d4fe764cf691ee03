import numpy as np
import pytest

from vvlab.grid import FarField, GridConfig, ObstacleSpec, build_grid
from vvlab.solver import Trajectory, constant_state
from vvlab.stats import Ensemble
from vvlab.thermo import GasLaw, ViscosityPair


@pytest.fixture
def law():
    return GasLaw(a=1.0, gamma=1.4)


@pytest.fixture
def law_g2():
    return GasLaw(a=1.0, gamma=2.0)


@pytest.fixture
def far_rest():
    return FarField(rho_inf=1.0, u_inf=(0.0, 0.0))


@pytest.fixture
def visc():
    return ViscosityPair(mu=1.0, lam=0.5)


@pytest.fixture
def grid_plain():
    """16x16 box [-1,1]^2, no obstacle."""
    return build_grid(GridConfig(nx=16, ny=16, x_min=-1, x_max=1, y_min=-1, y_max=1))


@pytest.fixture
def grid_disc():
    """32x32 box [-2,2]^2 with a disc obstacle."""
    return build_grid(GridConfig(
        nx=32, ny=32, x_min=-2, x_max=2, y_min=-2, y_max=2,
        obstacle=ObstacleSpec(kind="disc", center=(0.0, 0.0), radius=0.4),
    ))


def constant_trajectory(grid, far, times, rho, m, epsilon=0.0):
    """Trajectory whose fields are uniform (rho, m) at every snapshot."""
    nx, ny = grid.nx, grid.ny
    rhos = [np.full((nx, ny), rho) for _ in times]
    mxs = [np.full((nx, ny), m[0]) for _ in times]
    mys = [np.full((nx, ny), m[1]) for _ in times]
    return Trajectory.from_fields(grid, far, times, rhos, mxs, mys, epsilon=epsilon)


def two_state_ensemble(grid, law, far, n_members, state_a, state_b, times=(0.0, 0.5, 1.0)):
    """Alternating ensemble A, B, A, B, ... of uniform states."""
    members = []
    for k in range(n_members):
        rho, m = state_a if k % 2 == 0 else state_b
        members.append(constant_trajectory(grid, far, times, rho, m))
    return Ensemble(members=members, grid=grid, law=law, far=far)


def random_field_trajectory(grid, far, times, rng, rho_range=(0.3, 2.5), m_scale=1.0,
                            epsilon=0.0):
    nx, ny = grid.nx, grid.ny
    rhos = [rng.uniform(*rho_range, size=(nx, ny)) for _ in times]
    mxs = [rng.normal(size=(nx, ny)) * m_scale for _ in times]
    mys = [rng.normal(size=(nx, ny)) * m_scale for _ in times]
    return Trajectory.from_fields(grid, far, times, rhos, mxs, mys, epsilon=epsilon)


def random_ensemble(grid, law, far, n_members, seed, times=(0.0, 1.0), m_scale=1.0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    members = [random_field_trajectory(grid, far, times, rng, m_scale=m_scale)
               for _ in range(n_members)]
    return Ensemble(members=members, grid=grid, law=law, far=far)
