"""Finite-scale coarse structures: threshold graphs, path metrics, growth, comparison."""
from .compare import (
    ClosureResult,
    QuasiIsometryReport,
    StableInterval,
    higher_order_closure,
    max_oracle,
    monotone_domination,
    quasi_isometry_fit,
    sandwich_inclusions,
    semicontinuity_check,
    stable_range,
)
from .graphs import (
    UNDETERMINED,
    AsdimEstimate,
    CoarseProfile,
    ComponentPartition,
    LinearFit,
    asdim_bound,
    coarse_profile,
    connected_profile,
    generated_closure,
    growth_curve,
    growth_obstruction,
    growth_slope,
    in_generated,
    linear_fit,
    path_metric,
)
from .structures import (
    UNREACHABLE,
    DecayMatrix,
    Filtration,
    GrowthCurve,
    PathMetric,
    Relation,
    SiteSet,
    build_decay_matrix,
    compose,
    epsilon_graph,
    inverse,
    union,
)
