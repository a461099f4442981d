"""Displacement interpolations on finite weighted graphs.

Two routes to the same object: the zero-temperature limit construction
(transport LP with exact duals, entropy selection over the optimal face,
closed-form geodesic-bridge dynamics) and finite-slowing entropic problems
over lazy random walks, which converge to the limit and are checked against
it at desk scale.
"""

from .bridges import (
    BridgeFields,
    backward_coefficients,
    bridge_fields,
    bridge_jump_kernel,
    bridge_marginal_exact,
    bridge_mass_rate,
    forward_coefficients,
    geodesic_endpoint_measure,
    two_time_table,
)
from .entropic import (
    InfeasibleMaskError,
    ScalingPair,
    SinkhornResult,
    entropic_value,
    masked_sinkhorn,
    relative_entropy,
    schrodinger_flow,
    sinkhorn,
    total_variation,
)
from .geodesics import (
    ChainStats,
    DiscretePath,
    GeodesicDag,
    InvalidPathError,
    chain_statistics,
    geodesic_dag,
    is_geodesic,
    path_length,
)
from .graphs import (
    BaseMeasure,
    DisconnectedGraphError,
    DistanceMatrix,
    Graph,
    GraphError,
    RateKernel,
    build_reversible_walk,
    build_simple_walk,
    check_detailed_balance,
    intrinsic_distance,
    tighten_edge_lengths,
    validate_hypotheses,
)
from .harness import (
    ConvergenceReport,
    LimitArtifacts,
    MonteCarloError,
    MonteCarloReport,
    emit,
    run_limit,
    run_montecarlo,
    run_sweep,
)
from .instances import InstanceError, InstanceSpec, RunParams, load_instance, parse_instance
from .interpolation import (
    CouplingCheck,
    DisplacementInterpolation,
    TimeChange,
    benamou_value,
    build_fields,
    constant_speed_timechange,
    displacement_kernel,
    fokker_planck_residual,
    interior_grid,
    intermediate_coupling_check,
    interpolate,
    interpolate_series,
    limit_interpolation,
    limit_plan,
    mass_rate,
    mass_rate_series,
    speed,
    speed_series,
)
from .transport import TransportSolution, maximal_feasible_support, solve_mk, tight_set
from .walks import (
    EndpointJoint,
    Generator,
    PathSample,
    bridge_marginal,
    endpoint_joint,
    girsanov_log_density,
    sample_path,
    slow_kernel,
    transition_matrix,
)

__version__ = "0.1.0"
