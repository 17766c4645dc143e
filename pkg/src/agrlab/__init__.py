"""agrlab: exact arithmetic dynamics of plane rational maps over Q and P1(Fp).

The library iterates rational maps of the plane in exact rational
arithmetic, reduces points and maps modulo an odd prime, and searches for
the minimal iteration count after which reduction and evolution commute
again at singular points of the reduced dynamics ("almost good
reduction").  Supported map families: symmetric QRT maps, q-discrete
Painleve III and IV, and the Hietarinta-Viallet map.
"""

__version__ = "0.1.0"

from .exactnum import (
    PLUS_INFINITY,
    FpElem,
    PFp,
    fp_arith,
    reduce_rational,
    to_rational,
    valuation,
)
from .polyfield import (
    GF,
    INCONCLUSIVE,
    INDETERMINATE,
    QQ,
    UNDEFINED,
    MultiPoly,
    RationalFunction,
    UniPoly,
    UniRF,
    evaluate_rf,
    minimal_form,
    perturbation_eval,
    poly_gcd,
    reduce_rf,
    rf_compose,
)
from .maps import (
    REDUCED_SINGULARITY,
    ExactSingularity,
    HietarintaViallet,
    QPainleve3,
    QPainleve4,
    QRTMap,
    family_from_params,
    in_domain,
    step_exact,
    step_kind,
    step_reduced,
    step_symbolic,
    validate_params,
)
from .agr import (
    AGRQuery,
    CaseID,
    EXPECTED_M,
    FailureWitness,
    PropositionReport,
    RecoveryResult,
    classify_case,
    closed_form_value,
    detect_agr_failure,
    find_recovery_step,
    verify_proposition,
)
from .orbits import OrbitRecord, PhasePortrait, phase_portrait, trace_orbit

__all__ = [
    "__version__",
    # exact numbers
    "PLUS_INFINITY", "FpElem", "PFp", "fp_arith", "reduce_rational",
    "to_rational", "valuation",
    # polynomial algebra
    "GF", "QQ", "MultiPoly", "RationalFunction", "UniPoly", "UniRF",
    "UNDEFINED", "INDETERMINATE", "INCONCLUSIVE",
    "poly_gcd", "rf_compose", "minimal_form", "reduce_rf", "evaluate_rf",
    "perturbation_eval",
    # map families
    "QRTMap", "QPainleve3", "QPainleve4", "HietarintaViallet",
    "ExactSingularity", "REDUCED_SINGULARITY",
    "family_from_params", "validate_params", "in_domain",
    "step_exact", "step_reduced", "step_symbolic", "step_kind",
    # recovery checking
    "AGRQuery", "CaseID", "EXPECTED_M", "RecoveryResult", "FailureWitness",
    "PropositionReport", "classify_case", "closed_form_value",
    "find_recovery_step", "verify_proposition", "detect_agr_failure",
    # orbits
    "OrbitRecord", "PhasePortrait", "trace_orbit", "phase_portrait",
]
