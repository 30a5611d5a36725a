"""High-order series solutions for the phase space near collinear libration points.

The package builds a unified trig-exponential expansion of the motion near
L1/L2/L3 of the circular restricted three-body problem, with a coupling
coefficient whose bifurcation polynomial selects halo, quasihalo and
second-type halo families alongside Lissajous orbits, their invariant
manifolds, and transit/non-transit trajectories.  Everything is validated
against direct numerical integration of the exact equations.
"""

from .bifurcation import (
    BifurcationSlice,
    CriticalCase,
    EtaSolutionReport,
    classify_critical,
    solution_count_map,
    solve_eta,
    third_order_constants,
)
from .constructor import (
    ConstructionError,
    OrderRHS,
    ResonanceError,
    SolutionSet,
    assemble_rhs,
    build,
    initialize_linear,
    residual_order_max,
    solve_order,
)
from .io import read_coefficients, write_coefficients
from .model import (
    NAMED_SYSTEMS,
    Frequencies,
    LPoint,
    ModelError,
    State6,
    SystemParams,
    eom_rhs,
    euler_quintic,
    frequencies,
    jacobi_constant,
    libration_point_position,
    local_from_synodic,
    make_params,
    synodic_from_local,
)
from .orbits import (
    InadmissibleSpecError,
    OrbitClass,
    OrbitEvaluator,
    OrbitSpec,
    classify,
    manifold_branch,
    sample_trajectory,
    scalar_frequencies,
)
from .series import AmplitudeSeries, TrigExpSeries, canonicalize, differentiate, eval_series, multiply, potential_gradient
from .validation import (
    DivergenceRecord,
    IntegratorConfig,
    divergence_grid,
    divergence_time,
    integrate,
    residual_scaling,
)

__version__ = "0.1.0"
