"""Cone spectral radius enclosures for homogeneous order-preserving maps on ordered sequence spaces."""
from .errors import NumericalError, UsageError
from .ordered_space import (
    NORM_KINDS,
    GaugeResult,
    SpaceSpec,
    bv_example_pair,
    companion_half_norm,
    companion_norm,
    half_norm_oracle,
    leq_meet_join,
    lower_gauge,
    norm,
    normal_point_gauge,
    u_norm,
)
from .maps import (
    Compose,
    FunctionMap,
    Linear,
    MapExpr,
    Perturb,
    Power,
    Rank,
    Scale,
    TwoSex,
    check_homogeneous_order_preserving,
    cone_operator_norm,
    evaluate,
    identity,
)
from .radii import (
    RadiusReport,
    cw_numbers,
    enclosure_report,
    eta_lower,
    eta_upper,
    local_radius_gamma,
    opnorm_radius,
)
from .eigensolvers import (
    SolveResult,
    cyclic_sum_eigenvector,
    epsilon_homotopy,
    eta_via_meet_bisection,
    meet_iteration_lower,
    power_iterate,
    sup_lower_eigenvector,
)
from .population import (
    RankConfig,
    TwoSexParams,
    build_rank_model,
    contraction_renorm,
    dissipativity_check,
    orbit_simulate,
    rank_cw_formulas,
    rank_positivity_conditions,
    reference_rank_config,
    twosex_closed_form,
)

__version__ = "0.1.0"
