"""vvlab: ensemble vanishing-viscosity laboratory for 2D compressible flow.

Solves families of isentropic Navier-Stokes problems past a convex
obstacle at decreasing viscosities and evaluates the statistical-limit
diagnostics: Cesaro-averaged empirical measures, relative-energy
budgets, Reynolds defect tensors, statistical-equivalence tables,
S-convergence and deviation-fraction metrics, and weak Euler residuals.
"""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    CompactRegion,
    FarField,
    Grid,
    GridConfig,
    ObstacleSpec,
    annulus_cells,
    build_grid,
    rect_cells,
)
from .thermo import (  # noqa: F401
    GasLaw,
    ViscosityPair,
    calibrate_coercivity,
    coercivity_gap,
    pressure,
    pressure_potential,
    relative_energy,
    total_energy,
    viscous_stress,
)
from .solver import (  # noqa: F401
    FluidState,
    SolverConfig,
    Trajectory,
    solve,
    step,
)
from .stats import (  # noqa: F401
    CesaroField,
    Ensemble,
    barycenter,
    cesaro_average,
    energy_budget,
    expectation,
    modulus_of_continuity,
    s_convergence_metric,
    statistical_convergence_fraction,
)
from .defect import (  # noqa: F401
    DefectField,
    convex_pairing,
    defect_momentum_residual,
    far_field_decay,
    psd_check,
    reynolds_defect,
    trace_energy_sandwich,
)
from .weakform import (  # noqa: F401
    euler_residual,
    kinetic_angular_identity_check,
    statistical_equivalence_report,
    weak_residual_ns,
)
