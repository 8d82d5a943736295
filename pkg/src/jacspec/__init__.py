"""jacspec: spectra of positive-definite infinite Jacobi matrices with
trace-class inverse, located as zeros of the characteristic entire function
F(z) = 1 - z sum_n w_n(0) P_n(z) and cross-validated against truncated-matrix
eigenvalues and the Al-Salam--Carlitz II closed form.
"""

__version__ = "0.1.0"

from .charfn import (CharFnEvaluator, CharFnValue, charfn_partial_sum,
                     charfn_ratio, hadamard_product, qpochhammer_reference)
from .errors import AssumptionViolation, ConvergenceError
from .qseries import (QParams, asc2_orthonormal, asc2_series_vs_product,
                      asc2_v, orthonormal_at_family_point,
                      phi1_closed_form_check, qbinomial_check, qgauss_check,
                      qpoch, qpoch_inf, second_kind_at_family_point,
                      spectrum_product_reference, w_factorization_check,
                      weyl_at_family_point)
from .recurrence import (GreenBlock, ScaledPolyPair, eval_phat, eval_q,
                         eval_q_assoc, green_block, jacobi_block,
                         q_assoc_forward, recurrence_residuals,
                         resolvent_identity_check)
from .second_kind import (KappaSequence, SecondKindTable, TraceInverse,
                          kappa_sequence, second_kind_values, trace_inverse,
                          weyl)
from .sources import ASC2Source, CoefficientSource, TableSource
from .spectrum import (SpectrumResult, TruncatedTridiagonal, find_spectrum,
                       oracle_compare, sturm_counts, sturm_eigenvalues)
from .verify import CheckResult, run_suite

__all__ = [
    "ASC2Source",
    "AssumptionViolation",
    "CharFnEvaluator",
    "CharFnValue",
    "CheckResult",
    "CoefficientSource",
    "ConvergenceError",
    "GreenBlock",
    "KappaSequence",
    "QParams",
    "ScaledPolyPair",
    "SecondKindTable",
    "SpectrumResult",
    "TableSource",
    "TraceInverse",
    "TruncatedTridiagonal",
    "asc2_orthonormal",
    "asc2_series_vs_product",
    "asc2_v",
    "charfn_partial_sum",
    "charfn_ratio",
    "eval_phat",
    "eval_q",
    "eval_q_assoc",
    "find_spectrum",
    "green_block",
    "hadamard_product",
    "jacobi_block",
    "kappa_sequence",
    "oracle_compare",
    "orthonormal_at_family_point",
    "phi1_closed_form_check",
    "q_assoc_forward",
    "qbinomial_check",
    "qgauss_check",
    "qpoch",
    "qpoch_inf",
    "qpochhammer_reference",
    "recurrence_residuals",
    "resolvent_identity_check",
    "run_suite",
    "second_kind_at_family_point",
    "second_kind_values",
    "spectrum_product_reference",
    "sturm_counts",
    "sturm_eigenvalues",
    "trace_inverse",
    "w_factorization_check",
    "weyl",
    "weyl_at_family_point",
]
