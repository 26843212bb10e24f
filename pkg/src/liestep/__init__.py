"""Structure-preserving integrators for rigid-body dynamics on SO(n).

The package provides the implicit discrete Euler-Poincare updates
(Moser-Veselov and exponential-chart forms), the explicit discrete
Lie-Poisson coadjoint transport, reconstruction of group trajectories,
splitting/RK4 baselines, and a diagnostics harness for conservation and
convergence properties.
"""

from .baselines import SplittingScheme, rk4_step, splitting_step
from .config import (
    NewtonConfig,
    SimulationConfig,
    Trajectory,
    TrajectoryRecord,
)
from .diagnostics import (
    DriftReport,
    OrderReport,
    casimir_drift,
    convergence_study,
    energy_drift,
    noether_check,
    symplectic_check,
)
from .errors import (
    BranchCutError,
    DegenerateInertiaError,
    IoError,
    LiestepError,
    NewtonDivergenceError,
    ParseError,
    SchemaMismatchError,
    SingularMatrixError,
    SingularOperatorError,
    TrajectoryError,
    UnsupportedDimensionError,
    ValidationError,
)
from .integrators import (
    DepState,
    dep_step_chart,
    dep_step_mv,
    dlp_step,
    mv_equivalence_check,
    mv_momentum,
    reconstruct_step,
    run_trajectory,
)
from .lagrangians import (
    DiscreteLagrangian,
    chart_discrete_lagrangian,
    chart_reduced_lagrangian,
    mv_discrete_lagrangian,
    mv_reduced_lagrangian,
    mv_velocity_discretization,
)
from .lie_core import (
    Ad,
    ad,
    cayley,
    chi_op,
    coAd,
    coad,
    coords,
    dim_so,
    exp,
    from_coords,
    hat,
    iex_op,
    log,
    pairing,
    project_group,
    skew_part,
    vee,
)
from .rigid_body import (
    BodySpatialPair,
    Inertia,
    body_from_spatial,
    continuous_ep_rhs,
    inertia_apply,
    inertia_invert,
    kinetic_energy,
    spatial_from_body,
)

__version__ = "0.1.0"
