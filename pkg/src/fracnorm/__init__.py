"""Distance-weighted fractional norms, Whitney covers, and real-interpolation
K-functionals on discretized planar domains."""

from .domain import (
    DomainError,
    DomainSpec,
    DistanceField,
    GridDomain,
    build_domain,
    delta_weight,
    distance_to_boundary,
)
from .norms import (
    FracParams,
    GridFunction,
    NormReport,
    bbm_ratio,
    delta_seminorm,
    gradient,
    norm_report,
    tilde_seminorm,
    w1p_weighted_norm,
    weighted_lp_norm,
)
from .whitney import (
    expanded_cover,
    local_average,
    partition_of_unity,
    refine_lambda,
    smooth_approximant,
    whitney_decompose,
)
from .kfunctional import (
    compute_k_curve,
    default_lambda_grid,
    equivalence_report,
    interpolation_norm,
    k_constructive,
    k_variational,
)
from .functions import function_library

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "DomainSpec",
    "DistanceField",
    "GridDomain",
    "build_domain",
    "delta_weight",
    "distance_to_boundary",
    "FracParams",
    "GridFunction",
    "NormReport",
    "bbm_ratio",
    "delta_seminorm",
    "gradient",
    "norm_report",
    "tilde_seminorm",
    "w1p_weighted_norm",
    "weighted_lp_norm",
    "expanded_cover",
    "local_average",
    "partition_of_unity",
    "refine_lambda",
    "smooth_approximant",
    "whitney_decompose",
    "compute_k_curve",
    "default_lambda_grid",
    "equivalence_report",
    "interpolation_norm",
    "k_constructive",
    "k_variational",
    "function_library",
]
