from __future__ import annotations

__version__ = "0.1.0"

from pseudocone.bounds import (
    BoundCurve,
    BoundError,
    BoundPoint,
    PairGeometry,
    bound_curve,
    db_gap,
    hunter_bound,
    ilp_union_bound,
    ilp_union_from_geometry,
    intersection_lower,
    lp_union_bound,
    ml_union_bound,
    pairwise_error,
    planar_union_mc,
    q_func,
    q_inv,
    snr_at_fer,
    tripletwise_numeric,
    tripletwise_upper,
)
from pseudocone.fundamental_cone import (
    ConeError,
    DimensionGuardError,
    GeneratorSet,
    InequalitySystem,
    RayBudgetError,
    WeightHistogram,
    cone_inequalities,
    enumerate_rays,
    minimum_pseudo_weight,
    read_generators,
    sample_rays,
    sampling_costs,
    select_subgroup,
    weight_histogram,
    write_generators,
)
from pseudocone.gf2codes import (
    BinaryMatrix,
    CodeError,
    CodeParams,
    Codeword,
    MatrixFormatError,
    PseudoconeError,
    builtin,
    code_params,
    enumerate_codewords,
    parse_parity_matrix,
    read_matrix,
    systematic_from_generator_poly,
)
from pseudocone.pseudogeometry import ChannelParams, GeometryError, Ray, angle_deg, pseudo_weight, virtual_point
from pseudocone.simulate import (
    FerEstimate,
    LpProblem,
    SimConfig,
    SimplexCyclingError,
    SimulationError,
    lpd_full_fer,
    lpd_subgroup_fer,
    mld_subgroup_fer,
    separate_cut,
    simplex_solve,
)
from pseudocone.spanning import CostMatrix, GraphError, Tree, brute_force_mst, build_angle_graph, mst_angle_distribution, prim_mst

__all__ = [
    "BinaryMatrix",
    "BoundCurve",
    "BoundError",
    "BoundPoint",
    "ChannelParams",
    "CodeError",
    "CodeParams",
    "Codeword",
    "ConeError",
    "CostMatrix",
    "DimensionGuardError",
    "FerEstimate",
    "GeneratorSet",
    "GeometryError",
    "GraphError",
    "InequalitySystem",
    "LpProblem",
    "MatrixFormatError",
    "PairGeometry",
    "PseudoconeError",
    "Ray",
    "RayBudgetError",
    "SimConfig",
    "SimplexCyclingError",
    "SimulationError",
    "Tree",
    "WeightHistogram",
    "angle_deg",
    "bound_curve",
    "brute_force_mst",
    "build_angle_graph",
    "builtin",
    "code_params",
    "cone_inequalities",
    "db_gap",
    "enumerate_codewords",
    "enumerate_rays",
    "hunter_bound",
    "ilp_union_bound",
    "ilp_union_from_geometry",
    "intersection_lower",
    "lp_union_bound",
    "lpd_full_fer",
    "lpd_subgroup_fer",
    "minimum_pseudo_weight",
    "ml_union_bound",
    "mld_subgroup_fer",
    "mst_angle_distribution",
    "pairwise_error",
    "parse_parity_matrix",
    "planar_union_mc",
    "prim_mst",
    "pseudo_weight",
    "q_func",
    "q_inv",
    "read_generators",
    "read_matrix",
    "sample_rays",
    "sampling_costs",
    "select_subgroup",
    "separate_cut",
    "simplex_solve",
    "snr_at_fer",
    "systematic_from_generator_poly",
    "tripletwise_numeric",
    "tripletwise_upper",
    "virtual_point",
    "weight_histogram",
    "write_generators",
]
