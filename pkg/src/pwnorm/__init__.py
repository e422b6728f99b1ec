"""Partition-and-weight norms for unconditional bases of L_p, p > 2."""
from .stepfn import DyadicSet, StepFunction, abs_pow, cond_expect, integral, lp_norm, pointwise, refine
from .norms import (
    BasisSequence,
    Family,
    Partition,
    PWPair,
    Weights,
    ell_p_norm,
    expansion_norm,
    family_norm,
    mixed_norm,
    pw_norm,
    square_function_norm,
)
from .duality import NormingFunction, build_family, maxc_g, optimal_g, reduce_g, weights_from_g

__all__ = [
    "BasisSequence", "DyadicSet", "Family", "NormingFunction", "PWPair", "Partition", "StepFunction",
    "Weights", "abs_pow", "build_family", "cond_expect", "ell_p_norm", "expansion_norm", "family_norm",
    "integral", "lp_norm", "maxc_g", "mixed_norm", "optimal_g", "pointwise", "pw_norm", "reduce_g",
    "refine", "square_function_norm", "weights_from_g",
]
__version__ = "0.1.0"
