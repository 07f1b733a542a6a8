"""Exact-arithmetic toolkit for normality structure of random sign matrices."""

__version__ = "0.1.0"

from .errors import CapabilityError, InputError, InvariantViolation, NormalityLabError
from .matrices import (
    BorderedSystem,
    IntMatrix,
    Permutation,
    SignMatrix,
    apply_permutation,
    build_T,
    build_x,
    commutator,
    constraint_residual,
    format_int_matrix,
    format_sign_matrix,
    is_c_normal,
    is_normal,
    parse_int_matrix,
    parse_sign_matrix,
    permute_int_matrix,
    residual_c,
    submatrix,
    t_transpose_x,
)
from .rank import (
    RankProfile,
    RankResult,
    modular_prime,
    rank_exact,
    rank_i,
    rank_mod_prime,
    rank_of,
    rank_profile,
)
