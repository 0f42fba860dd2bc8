"""qpaug: generation, optimality-preserving augmentation, and graph encoding
of linearly-constrained quadratic programs."""

from .core import (
    ActivePartition,
    Definiteness,
    InputError,
    KktReport,
    LcqpInstance,
    ProblemKind,
    Solution,
    SparseMatrix,
    kkt_residuals,
    kkt_residuals_raw,
    objective,
    partition_constraints,
    permute_instance,
    psd_certificate,
)
from .generators import (
    GENERATOR_FAMILIES,
    gen_dataset,
    gen_lasso,
    gen_lp,
    gen_portfolio,
    gen_qp,
    gen_svm,
    make_sparse_spd,
)
from .graphenc import (
    BipartiteGraph,
    MpnnWeights,
    encode_instance,
    init_mpnn_weights,
    mpnn_forward,
    nt_xent_loss,
    pooled_embedding,
    to_bipartite_graph,
)
from .solver import (
    InfeasibleOrUnbounded,
    SolverConfig,
    Unbounded,
    Unconverged,
    solve_enumeration,
    solve_splitting,
    solve_splitting_detailed,
)
from .transforms import (
    AugmentPolicy,
    MapKind,
    SolutionMap,
    TransformRecord,
    add_constraints,
    add_variable_biased,
    add_variable_constrained,
    add_variables,
    apply_policy,
    bias_instance,
    heuristic_accuracy,
    heuristic_inactive,
    heuristic_scores,
    map_solution,
    remove_idle_variables,
    remove_inactive_constraints,
    scale_constraints,
    scale_variables,
)

__all__ = [
    "ActivePartition",
    "Definiteness",
    "InputError",
    "KktReport",
    "LcqpInstance",
    "ProblemKind",
    "Solution",
    "SparseMatrix",
    "kkt_residuals",
    "kkt_residuals_raw",
    "objective",
    "partition_constraints",
    "permute_instance",
    "psd_certificate",
    "InfeasibleOrUnbounded",
    "SolverConfig",
    "Unbounded",
    "Unconverged",
    "solve_enumeration",
    "solve_splitting",
    "solve_splitting_detailed",
    "AugmentPolicy",
    "MapKind",
    "SolutionMap",
    "TransformRecord",
    "add_constraints",
    "add_variable_biased",
    "add_variable_constrained",
    "add_variables",
    "apply_policy",
    "bias_instance",
    "heuristic_accuracy",
    "heuristic_inactive",
    "heuristic_scores",
    "map_solution",
    "remove_idle_variables",
    "remove_inactive_constraints",
    "scale_constraints",
    "scale_variables",
    "GENERATOR_FAMILIES",
    "gen_dataset",
    "gen_lasso",
    "gen_lp",
    "gen_portfolio",
    "gen_qp",
    "gen_svm",
    "make_sparse_spd",
    "BipartiteGraph",
    "MpnnWeights",
    "encode_instance",
    "init_mpnn_weights",
    "mpnn_forward",
    "nt_xent_loss",
    "pooled_embedding",
    "to_bipartite_graph",
]

__version__ = "0.1.0"
