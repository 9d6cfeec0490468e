"""Stopped-Brownian-motion simulation of the k-XOR Forrelation distributions."""

__version__ = "0.1.0"

from .wht import DimensionError, fwht, phi
from .polynomial import (CapacityError, MultilinearPoly, Restriction, evaluate, exact_restriction_expectation,
                         from_truth_table, level_weight, partial_derivative, restrict, sample_restriction,
                         sup_restricted_level_weight)
from .stochastic import (DenseCovariance, FactorizationError, HadamardBlock, SimParams, StoppedPath,
                         default_epsilon, integrate_along_path, sample_endpoint, sample_path, simulate)
from .forrelation import (UNDEFINED, BlockSample, CubePoint, forrelation_decision, forrelation_k,
                          round_to_cube, sample_D_parity, sample_D_S)
from .verifiers import (VerifierReport, advantage_estimate, difference_identity_check, dynkin_check,
                        product_monomial_closed_form)

__all__ = [
    "BlockSample", "CapacityError", "CubePoint", "DenseCovariance", "DimensionError", "FactorizationError",
    "HadamardBlock", "MultilinearPoly", "Restriction", "SimParams", "StoppedPath", "UNDEFINED",
    "VerifierReport", "advantage_estimate", "default_epsilon", "difference_identity_check", "dynkin_check",
    "evaluate", "exact_restriction_expectation", "forrelation_decision", "forrelation_k", "from_truth_table",
    "fwht", "integrate_along_path", "level_weight", "partial_derivative", "phi",
    "product_monomial_closed_form", "restrict", "round_to_cube", "sample_D_S", "sample_D_parity",
    "sample_endpoint", "sample_path", "sample_restriction", "simulate", "sup_restricted_level_weight",
]
