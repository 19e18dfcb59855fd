"""Measurement interpolation for finite-dimensional quantum measurements."""

from .errors import MintError
from .interpolation import (
    InterpolationResult,
    VerificationReport,
    build_interpolation,
    interpolate_kkb,
    progress_ceiling,
    solve_c,
    verify_interpolation,
)
from .linalg import Tolerances, tolerances, use_tolerances
from .measurement import (
    CoarseGrainMap,
    Measurement,
    ProductBasis,
    coarse_grain,
    compose,
    is_trivial,
    is_von_neumann,
    trivial,
    validate,
    von_neumann,
)
from .progress import (
    GuessingProgress,
    ProgressFunction,
    check_axioms,
    example_mu,
    induced_mu,
    threshold_example_mu,
)
from .protocol import (
    Completion,
    Leaf,
    Node,
    ProtocolTree,
    decompose_from_interpolation,
    discriminates,
    find_interpolation_node,
    implements,
    interpolate_protocol,
    leaf_povm,
)
from .structure import (
    extract_local_nondisturbing,
    factor_product,
    is_non_disturbing,
    is_product,
    local_diagonality_space,
    sep_to_product_stage,
)

__version__ = "0.1.0"

__all__ = [
    "CoarseGrainMap",
    "Completion",
    "GuessingProgress",
    "InterpolationResult",
    "Leaf",
    "Measurement",
    "MintError",
    "Node",
    "ProductBasis",
    "ProgressFunction",
    "ProtocolTree",
    "Tolerances",
    "VerificationReport",
    "build_interpolation",
    "check_axioms",
    "coarse_grain",
    "compose",
    "decompose_from_interpolation",
    "discriminates",
    "example_mu",
    "extract_local_nondisturbing",
    "factor_product",
    "find_interpolation_node",
    "implements",
    "induced_mu",
    "interpolate_kkb",
    "interpolate_protocol",
    "is_non_disturbing",
    "is_product",
    "is_trivial",
    "is_von_neumann",
    "leaf_povm",
    "local_diagonality_space",
    "progress_ceiling",
    "sep_to_product_stage",
    "solve_c",
    "threshold_example_mu",
    "tolerances",
    "trivial",
    "use_tolerances",
    "validate",
    "verify_interpolation",
    "von_neumann",
]
