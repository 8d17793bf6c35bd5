"""Outlier-robust estimation toolkit.

Solvers that trade a known inlier noise bound (threshold-adaptive trimming,
graduated non-convexity over a truncated quadratic) or coarse noise brackets
(the minimally tuned variants) for consensus-style robustness, exact
enumeration oracles and verifiers for small instances, and four plug-in
problem classes: linear regression, point-cloud registration, weak-perspective
shape alignment, and SE(2)/SE(3) pose-graph optimization with g2o IO.
"""

from .errors import (
    ConfigError,
    Degenerate,
    DegenerateClusters,
    DegenerateGeometry,
    DisconnectedOdometry,
    EmptyInlierSet,
    InsufficientSamples,
    InvalidBound,
    MissingVertex,
    NoFeasibleSet,
    ParseError,
    RankDeficient,
    RateOutOfRange,
    RobestError,
    SingularNormalEquations,
    TooFew,
    TooLarge,
)
from .solvers import (
    L2,
    LINF,
    AdaptConfig,
    AdaptMintConfig,
    EstimationProblem,
    GncConfig,
    GncMintConfig,
    RobustEstimate,
    TraceRecord,
    gnc_mu_init,
    gnc_weight_update,
    residual_norm,
    solve_adapt,
    solve_adapt_mint,
    solve_gnc_mint,
    solve_gnc_tls,
    solve_greedy,
)
from .stats import (
    FitScore,
    abs_chi_diff_quantile,
    chi2_inv,
    clusters_separation,
    cramer_von_mises,
    fit_chi,
    inlier_threshold,
    residual_norm_bound,
    sq_norm_change_bound,
)
from .oracle import (
    MC,
    MTS,
    TLS,
    OracleSolution,
    RelationshipReport,
    min_norm_at_cardinality,
    oracle_enumerate,
    suboptimality_bound,
    verify_relationship,
)
from .linear import LinearProblem, linear_weighted_solve
from .registration import RegistrationProblem, weighted_rigid_align
from .shape import ShapeEstimate, ShapeProblem, weighted_shape_align
from .posegraph import (
    CycleBounds,
    Edge,
    PoseGraph,
    PoseGraphProblem,
    cycle_bounds,
    gauss_newton,
    loop_multiplicities,
    odometry_init,
    pgo_cost,
    pgo_residual,
    pgo_weighted_solve,
)
from .g2o import normalize_information, parse_g2o, write_g2o
from .generators import (
    LabeledInstance,
    adversarial_line_instance,
    gen_grid_2d,
    gen_linear,
    gen_registration,
    gen_shape,
    gen_sphere_3d,
    inject_outliers,
    random_chain_se2,
)
from .metrics import (
    metric_ate,
    metric_rotation_translation,
    metric_tp_fp,
    rigid_align,
    trajectory,
)
from .experiment import (
    ExperimentConfig,
    TrialRecord,
    load_config,
    run_experiment,
    trial_seeds,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig", "AdaptMintConfig", "ConfigError", "CycleBounds",
    "Degenerate", "DegenerateClusters", "DegenerateGeometry",
    "DisconnectedOdometry", "Edge", "EmptyInlierSet", "EstimationProblem",
    "ExperimentConfig", "FitScore", "GncConfig", "GncMintConfig",
    "InsufficientSamples", "InvalidBound", "L2", "LINF", "LabeledInstance",
    "LinearProblem", "MC", "MTS", "MissingVertex", "NoFeasibleSet",
    "OracleSolution", "ParseError", "PoseGraph", "PoseGraphProblem",
    "RankDeficient", "RateOutOfRange", "RegistrationProblem",
    "RelationshipReport", "RobestError", "RobustEstimate", "ShapeEstimate",
    "ShapeProblem", "SingularNormalEquations", "TLS", "TooFew", "TooLarge",
    "TraceRecord", "TrialRecord", "abs_chi_diff_quantile",
    "adversarial_line_instance", "chi2_inv", "clusters_separation",
    "cramer_von_mises", "cycle_bounds", "fit_chi", "gauss_newton",
    "gen_grid_2d", "gen_linear", "gen_registration", "gen_shape",
    "gen_sphere_3d", "gnc_mu_init", "gnc_weight_update", "inject_outliers",
    "inlier_threshold", "linear_weighted_solve", "load_config",
    "loop_multiplicities", "metric_ate", "metric_rotation_translation",
    "metric_tp_fp", "min_norm_at_cardinality", "normalize_information",
    "odometry_init", "oracle_enumerate", "parse_g2o", "pgo_cost",
    "pgo_residual", "pgo_weighted_solve", "random_chain_se2",
    "residual_norm", "residual_norm_bound", "rigid_align", "run_experiment",
    "solve_adapt", "solve_adapt_mint", "solve_gnc_mint", "solve_gnc_tls",
    "solve_greedy", "sq_norm_change_bound", "suboptimality_bound",
    "trajectory", "trial_seeds", "verify_relationship",
    "weighted_rigid_align", "weighted_shape_align", "write_g2o",
]
