"""Numerics for finite-dimensional W*-probability spaces: modular theory,
continuous-logic sentences, Powers states and finite-stage sequence proxies."""

from .algebra import (BlockMatrix, WStarSpace, commutative_space, diagonal_space, direct_sum, make_space,
                      norms, random_faithful_space, sample, sharp_norm, state_eval, tensor, tensor_power,
                      tracial_space)
from .dsl import parse, to_text
from .logic import (beta_lower, central_witness, center_expectation, chi_factor_estimate, dixmier_residual,
                    herrero_szarek_witness, phi_t_estimate, theta_estimate, xi)
from .search import OptConfig, SentenceEstimate, evaluate

eval_ast = evaluate

__version__ = "0.1.0"

__all__ = [
    "BlockMatrix", "WStarSpace", "commutative_space", "diagonal_space", "direct_sum", "make_space", "norms",
    "random_faithful_space", "sample", "sharp_norm", "state_eval", "tensor", "tensor_power", "tracial_space",
    "parse", "to_text", "beta_lower", "central_witness", "center_expectation", "chi_factor_estimate",
    "dixmier_residual", "herrero_szarek_witness", "phi_t_estimate", "theta_estimate", "xi",
    "OptConfig", "SentenceEstimate", "evaluate", "eval_ast",
]
