"""Rate regions and exact small-n simulations for remote channel synthesis."""

from ._jit import kernel_backend
from .dsbs import (
    GapInputs,
    bsc,
    case5_witness,
    dsbs_joint,
    dsbs_wyner_ci,
    figure4_grid,
    rcs_gap_lower_bound,
    wyner_theta_tilde,
)
from .feasibility import (
    CompatibilityResult,
    InfeasiblePairError,
    SolverFailure,
    compatible_joint,
    compatible_polytope_vertices,
    find_compatible_channel,
)
from .prob import (
    Channel,
    JointTable,
    Pmf,
    ShapeError,
    binary_entropy,
    conditional_mutual_information,
    entropy,
    marginalize,
    markov_chain_joint,
    mutual_information,
    tv_distance,
)
from .regions import (
    NonConvergenceError,
    RatePoint,
    RegionWitness,
    SolverOptions,
    check_in_region,
    grid_oracle_min_rate,
    min_rate_dcs,
    min_rate_dcs_over_compatible,
    min_rate_rcs,
    region_boundary,
    wyner_common_information,
)
from .scheme import (
    Codebook,
    SchemeSpec,
    coordination_error,
    converse_audit,
    g_epsilon,
    induced_p_xy,
    sample_codebook,
    soft_covering_curve,
)

__version__ = "0.1.0"
