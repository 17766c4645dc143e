"""Almost-good-reduction checking.

For a residue point (x, y) of the reduced plane and a step index n, the
checker looks for the least m such that the m-fold composed map, reduced
mod p, is defined with finite coordinates at (x, y) and agrees there with
the reduction of the exact orbit of every sampled rational lift.  At
non-singular points m = 1 (good reduction); at singular points of the
reduced step the known families recover after 3, 4 or 5 steps with
closed-form values, which are implemented here and verified against the
search.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

from gmpy2 import mpq

from .exactnum import PFp, check_prime, reduce_rational
from .maps import (
    REDUCED_SINGULARITY,
    ExactSingularity,
    HietarintaViallet,
    MapFamily,
    QPainleve3,
    QPainleve4,
    QRTMap,
    _reduced_params,
    family_name,
    family_params,
    is_autonomous,
    reduced_steps,
    step_exact,
    step_kind,
    step_pair_rf,
    step_reduced,
    validate_params,
)
from .polyfield import (
    DEGENERATE_LINE,
    GF,
    INDETERMINATE,
    UNDEFINED,
    LineTracer,
    MultiPoly,
    PerturbationOverflow,
    RationalFunction,
    _subst_pair_mp,
    evaluate_rf,
)

__all__ = [
    "AGRQuery",
    "CaseID",
    "RecoveryResult",
    "FailureWitness",
    "PropositionReport",
    "Violation",
    "CrossOracleMismatch",
    "ZeroDenominatorInFormula",
    "UnsampleableResidue",
    "InconclusiveEvaluation",
    "EXPECTED_M",
    "classify_case",
    "closed_form_value",
    "find_recovery_step",
    "verify_proposition",
    "detect_agr_failure",
    "composed_reduced_pair",
]


class CrossOracleMismatch(ArithmeticError):
    """The perturbation path and the reduce-then-evaluate oracle disagree."""


class ZeroDenominatorInFormula(ArithmeticError):
    """A closed-form recovery denominator vanished: hypotheses violated."""


class UnsampleableResidue(RuntimeError):
    """Every sampled lift of the residue hit an exact singularity."""


class InconclusiveEvaluation(RuntimeError):
    """The reduced composed map could not be evaluated at the point."""


class CaseID(Enum):
    """Singularity classes of the reduced step maps.

    Each non-generic class carries the proven recovery step count; the
    resonant classes are the codimension-two loci that need two extra
    iterations.
    """

    QP3_X_EQ_A_GENERIC = "qp3_x_eq_a_generic"
    QP3_X_EQ_A_RESONANT = "qp3_x_eq_a_resonant"
    QP3_X_EQ_B_GENERIC = "qp3_x_eq_b_generic"
    QP3_X_EQ_B_RESONANT = "qp3_x_eq_b_resonant"
    QP3_Y_ZERO = "qp3_y_zero"
    QP3_ORIGIN = "qp3_origin"
    QP4_X_ZERO_GENERIC = "qp4_x_zero_generic"
    QP4_X_ZERO_RESONANT = "qp4_x_zero_resonant"
    QP4_X_NEG_TAU_GENERIC = "qp4_x_neg_tau_generic"
    QP4_X_NEG_TAU_RESONANT = "qp4_x_neg_tau_resonant"
    QP4_XY_ONE = "qp4_xy_one"
    HV_X_ZERO = "hv_x_zero"
    GENERIC = "generic"


#: Proven minimal recovery step for each singular class.
EXPECTED_M = {
    CaseID.QP3_X_EQ_A_GENERIC: 3,
    CaseID.QP3_X_EQ_A_RESONANT: 5,
    CaseID.QP3_X_EQ_B_GENERIC: 3,
    CaseID.QP3_X_EQ_B_RESONANT: 5,
    CaseID.QP3_Y_ZERO: 3,
    CaseID.QP3_ORIGIN: 4,
    CaseID.QP4_X_ZERO_GENERIC: 3,
    CaseID.QP4_X_ZERO_RESONANT: 5,
    CaseID.QP4_X_NEG_TAU_GENERIC: 3,
    CaseID.QP4_X_NEG_TAU_RESONANT: 5,
    CaseID.QP4_XY_ONE: 5,
    CaseID.HV_X_ZERO: 4,
    CaseID.GENERIC: 1,
}


@dataclass(frozen=True)
class AGRQuery:
    """One checking run: a family at a prime with search budgets."""

    family: MapFamily
    p: int
    n_window: tuple[int, int] = (0, 0)
    m_max: int = 8
    lifts_per_residue: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        check_prime(self.p)
        if self.m_max < 1:
            raise ValueError("m_max must be at least 1")
        if self.lifts_per_residue < 3:
            raise ValueError("lift independence needs at least 3 lifts")
        lo, hi = self.n_window
        if lo > hi:
            raise ValueError("empty step-index window")

    def n_values(self) -> range:
        if is_autonomous(self.family):
            return range(self.n_window[0], self.n_window[0] + 1)
        return range(self.n_window[0], self.n_window[1] + 1)


@dataclass
class RecoveryResult:
    """Outcome of the minimal-recovery-step search at one residue point.

    minimal_m is None when no m <= m_max recovers ("not recovered").
    lift_independent reports whether all sampled lifts reduced identically
    at every examined step.
    """

    residue_point: tuple[PFp, PFp]
    step_index: int
    minimal_m: Optional[int]
    recovered_value: Optional[tuple[PFp, PFp]]
    lift_independent: bool
    matched_case: Optional[CaseID]
    lift_trails: Optional[list] = None

    @property
    def recovered(self) -> bool:
        return self.minimal_m is not None


@dataclass
class FailureWitness:
    """A residue point at which almost good reduction fails."""

    residue_point: tuple[PFp, PFp]
    step_index: int
    kind: str  # "not_recovered" | "lift_dependent"
    m_max: int
    lift_trails: list


@dataclass
class Violation:
    kind: str
    residue: tuple[str, str]
    step_index: int
    detail: str


@dataclass
class PropositionReport:
    family: str
    params: dict
    p: int
    n_window: tuple[int, int]
    m_max: int
    lifts_per_residue: int
    rng_seed: int
    points_scanned: int = 0
    base_points_skipped: int = 0
    case_counts: dict = field(default_factory=dict)
    m_histogram: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    oracle_checks: int = 0
    assumptions: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# case classification


def _shifted_qp3(family: QPainleve3, n: int, p: int):
    """Residues of (a, b, c q^n, d q^n, q): the step-n map equals the
    step-0 map with c, d scaled by q^n."""
    a, b, c, d, q = _reduced_params(family, p)
    qn = pow(q, n, p)
    return a, b, c * qn % p, d * qn % p, q


def _shifted_qp4(family: QPainleve4, n: int, p: int):
    """Residues of (a, b, q, q^n tau0): step-n map = step-0 map with the
    initial tau scaled by q^n."""
    a, b, q, t0 = _reduced_params(family, p)
    return a, b, q, pow(q, n, p) * t0 % p


def classify_case(
    family: MapFamily, residue_point: tuple[PFp, PFp], n: int, p: int
) -> Optional[CaseID]:
    """Match a residue point against the singularity classes.

    Returns GENERIC at non-singular points, a CaseID at singular points of
    families with proven closed forms, and None at singular points of QRT
    maps (no closed form is asserted for those).
    """
    px, py = residue_point
    if not (px.is_finite and py.is_finite):
        raise ValueError("classification requires finite residue coordinates")
    x, y = px.r, py.r
    if isinstance(family, QRTMap):
        (a,) = _reduced_params(family, p)
        if y == 0 or (family.gamma >= 1 and x == 0):
            return None
        return CaseID.GENERIC
    if isinstance(family, QPainleve3):
        a, b, c, d, q = _shifted_qp3(family, n, p)
        if x == a:
            lhs = (a - b) * (a + b - c * q - d * q) * y % p
            rhs = b * (a - c) * (a - d) % p
            return (
                CaseID.QP3_X_EQ_A_RESONANT
                if lhs == rhs
                else CaseID.QP3_X_EQ_A_GENERIC
            )
        if x == b:
            lhs = (a - b) * (a + b - c * q - d * q) * y % p
            rhs = -a * (b - c) * (b - d) % p
            return (
                CaseID.QP3_X_EQ_B_RESONANT
                if lhs == rhs
                else CaseID.QP3_X_EQ_B_GENERIC
            )
        if y == 0:
            return CaseID.QP3_ORIGIN if x == 0 else CaseID.QP3_Y_ZERO
        return CaseID.GENERIC
    if isinstance(family, QPainleve4):
        a, b, q, t = _shifted_qp4(family, n, p)
        if x == 0:
            cond = (
                1
                + q * q * (-1 + a * t - b * t * t + q * t * t + t * y - a * t * t * y)
            ) % p
            return (
                CaseID.QP4_X_ZERO_RESONANT
                if cond == 0
                else CaseID.QP4_X_ZERO_GENERIC
            )
        if x == -t % p:
            if t and y == -pow(t, -1, p) % p:
                return CaseID.QP4_X_NEG_TAU_RESONANT
            return CaseID.QP4_X_NEG_TAU_GENERIC
        if x * y % p == 1:
            return CaseID.QP4_XY_ONE
        return CaseID.GENERIC
    if isinstance(family, HietarintaViallet):
        return CaseID.HV_X_ZERO if x == 0 else CaseID.GENERIC
    raise TypeError(f"not a map family: {family!r}")


# ---------------------------------------------------------------------------
# closed-form recovery values


def _fp_div(num: int, den: int, p: int, case: CaseID) -> int:
    den %= p
    if den == 0:
        raise ZeroDenominatorInFormula(
            f"zero denominator in the {case.value} recovery formula"
        )
    return num * pow(den, -1, p) % p


def closed_form_value(
    case: CaseID,
    residue_point: tuple[PFp, PFp],
    family: MapFamily,
    n: int,
    p: int,
) -> tuple[tuple[PFp, PFp], int]:
    """The proven recovery value and step count for a singular class.

    All parameter powers are taken mod p with the step-n shift applied
    (c, d scaled by q^n; tau0 scaled by q^n).
    """
    if case is CaseID.GENERIC:
        raise ValueError("generic points have no closed-form recovery")
    x = residue_point[0].r
    y = residue_point[1].r
    m = EXPECTED_M[case]

    if case in (CaseID.HV_X_ZERO,):
        value = (PFp.finite(y, p), PFp.finite(0, p))
        return value, m

    if isinstance(family, QPainleve3):
        a, b, c, d, q = _shifted_qp3(family, n, p)
        q2, q3, q4 = pow(q, 2, p), pow(q, 3, p), pow(q, 4, p)
        if case is CaseID.QP3_X_EQ_A_GENERIC:
            num = a * (b - c * q2) * (b - d * q2) * y
            den = b * (a - c) * (a - d) - (a - b) * (a + b - c * q - d * q) * y
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(b, p)), m
        if case is CaseID.QP3_X_EQ_A_RESONANT:
            num = b * (a - c * q4) * (a - d * q4)
            den = (a - b) * (a + b - c * q3 - d * q3)
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(a, p)), m
        if case is CaseID.QP3_X_EQ_B_GENERIC:
            num = b * (a - c * q2) * (a - d * q2) * y
            den = a * (b - c) * (b - d) + (a - b) * (a + b - c * q - d * q) * y
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(a, p)), m
        if case is CaseID.QP3_X_EQ_B_RESONANT:
            num = -a * (b - c * q4) * (b - d * q4)
            den = (a - b) * (a + b - c * q3 - d * q3)
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(b, p)), m
        if case is CaseID.QP3_Y_ZERO:
            return (PFp.finite(0, p), PFp.finite(_fp_div(a * b, x, p, case), p)), m
        if case is CaseID.QP3_ORIGIN:
            return (PFp.finite(0, p), PFp.finite(0, p)), m

    if isinstance(family, QPainleve4):
        a, b, q, t = _shifted_qp4(family, n, p)
        q2 = pow(q, 2, p)
        t2 = t * t % p
        if case is CaseID.QP4_X_ZERO_GENERIC:
            q3, q4, q6 = pow(q, 3, p), pow(q, 4, p), pow(q, 6, p)
            num = (
                -1
                - q3 * t2
                - b * q4 * t2
                + a * q6 * t2 * t
                + q2 * (1 + b * t2 - t * y + a * t2 * y)
            )
            den = (
                q2
                * t
                * (1 + q2 * (-1 + a * t - b * t2 + q * t2 + t * y - a * t2 * y))
            )
            return (
                (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(-q2 * t, p)),
                m,
            )
        if case is CaseID.QP4_X_ZERO_RESONANT:
            q4, q7, q8 = pow(q, 4, p), pow(q, 7, p), pow(q, 8, p)
            num = -1 + q2 + a * q4 * t + q7 * t2 - b * q8 * t2
            den = q4 * t * (-1 + a * q4 * t)
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(0, p)), m
        if case is CaseID.QP4_X_NEG_TAU_GENERIC:
            q3, q4 = pow(q, 3, p), pow(q, 4, p)
            ty = t * y % p
            num = (
                -1
                - ty
                + (q3 - b * q4) * t2 * (1 + ty)
                + q2 * (1 + b * t2 + ty + a * t2 * (-t + y))
            )
            den = q2 * t * (-1 + a * q2 * t) * (1 + ty)
            return (PFp.finite(_fp_div(num, den, p, case), p), PFp.finite(0, p)), m
        if case is CaseID.QP4_X_NEG_TAU_RESONANT:
            q6 = pow(q, 6, p)
            block = a * q6 * t2 % p
            return (
                (
                    PFp.finite(_fp_div(-1, block, p, case), p),
                    PFp.finite(-block, p),
                ),
                m,
            )
        if case is CaseID.QP4_XY_ONE:
            q6 = pow(q, 6, p)
            block = a * q6 * t2 * t * y % p
            return (
                (
                    PFp.finite(_fp_div(1, block, p, case), p),
                    PFp.finite(block, p),
                ),
                m,
            )

    raise ValueError(f"case {case} does not belong to family {family_name(family)}")


# ---------------------------------------------------------------------------
# reduce-then-evaluate oracle: reduce the exactly composed map, evaluate


_ORACLE_MAX_M = 3


@lru_cache(maxsize=512)
def composed_reduced_pair(family: MapFamily, p: int, n: int, m: int):
    """Reduction mod p of the exactly composed m-step map from index n.

    The composition is accumulated over Q without intermediate
    cancellation; the joint power-of-p scaling and the reduction commute
    with cancellation (Gauss), so common factors are removed once over F_p.
    Each component is a RationalFunction over F_p or UNDEFINED.
    """
    if m > _ORACLE_MAX_M:
        raise ValueError(f"bivariate oracle capped at m <= {_ORACLE_MAX_M}")
    from .polyfield import QQ  # local alias

    one = MultiPoly.const(1, QQ)
    comps = [
        (MultiPoly.var_x(QQ), one),
        (MultiPoly.var_y(QQ), one),
    ]
    for k in range(m):
        fx, fy = step_pair_rf(family, n + k, None)
        (A, B), (C, D) = comps
        new = []
        for comp in (fx, fy):
            num, den = _subst_pair_mp(comp.num, comp.den, A, B, C, D)
            new.append((num, den))
        comps = new
    out = []
    for num, den in comps:
        out.append(_reduce_raw_pair(num, den, p))
    return tuple(out)


def _reduce_raw_pair(num: MultiPoly, den: MultiPoly, p: int):
    """Minimal-form scaling and reduction of an uncancelled (num, den)."""
    from .polyfield import _val_q  # local alias
    from gmpy2 import mpz

    if den.is_zero:
        return UNDEFINED
    pz = mpz(p)
    vmin = None
    for poly in (num, den):
        for c in poly.coeffs.values():
            v = _val_q(c, pz)
            if vmin is None or v < vmin:
                vmin = v
    scale = mpq(p) ** (-vmin) if vmin else mpq(1)
    K = GF(p)

    def reduce_poly(poly: MultiPoly) -> MultiPoly:
        out = {}
        for key, c in poly.coeffs.items():
            cs = c * scale
            r = int(cs.numerator) * pow(int(cs.denominator), -1, p) % p
            if r:
                out[key] = r
        return MultiPoly._raw(out, K)

    rden = reduce_poly(den)
    if rden.is_zero:
        return UNDEFINED
    rnum = reduce_poly(num)
    return RationalFunction.make(rnum, rden)


def oracle_value(family: MapFamily, p: int, n: int, m: int, residue_point):
    """Evaluate the reduced composed map at a residue point.

    Returns a pair whose entries are PFp values, INDETERMINATE, or
    UNDEFINED (identically undefined component).
    """
    pair = composed_reduced_pair(family, p, n, m)
    out = []
    for comp in pair:
        if comp is UNDEFINED:
            out.append(UNDEFINED)
        else:
            out.append(evaluate_rf(comp, residue_point))
    return tuple(out)


def _is_finite_pair(value) -> bool:
    return (
        isinstance(value, tuple)
        and len(value) == 2
        and isinstance(value[0], PFp)
        and isinstance(value[1], PFp)
        and value[0].is_finite
        and value[1].is_finite
    )


# ---------------------------------------------------------------------------
# lift sampling


_MAX_RESAMPLES = 8
_LIFT_BOUND = 2**32


def _point_rng(query: AGRQuery, residue_point, n: int) -> random.Random:
    """Deterministic per-point RNG: execution order never matters."""
    px, py = residue_point
    key = "|".join(
        [
            str(query.rng_seed),
            family_name(query.family),
            str(sorted(family_params(query.family).items())),
            str(query.p),
            str(n),
            str(px.r),
            str(py.r),
        ]
    )
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _sample_coordinate(rng: random.Random, residue: int, p: int) -> mpq:
    num = rng.randrange(_LIFT_BOUND)
    den = rng.randrange(1, _LIFT_BOUND)
    while den % p == 0:
        den = rng.randrange(1, _LIFT_BOUND)
    return residue + p * mpq(num, den)


class _LiftOrbit:
    """Exact orbit of one sampled lift, extended on demand."""

    __slots__ = ("query", "n", "start", "current", "trail", "rng", "residue", "resamples")

    def __init__(self, query: AGRQuery, residue_point, n: int, rng: random.Random):
        self.query = query
        self.n = n
        self.rng = rng
        self.residue = residue_point
        self.resamples = 0
        self._resample()

    def _resample(self):
        px, py = self.residue
        self.start = (
            _sample_coordinate(self.rng, px.r, self.query.p),
            _sample_coordinate(self.rng, py.r, self.query.p),
        )
        self.current = self.start
        self.trail: list = []

    def extend_to(self, m: int) -> bool:
        """Extend the reduced trail to length m.

        Returns False when the lift had to be resampled (the caller must
        restart the comparison loop); raises UnsampleableResidue after too
        many failed attempts.
        """
        while len(self.trail) < m:
            k = len(self.trail)
            try:
                nxt = step_exact(self.query.family, self.n + k, self.current)
            except ExactSingularity:
                self.resamples += 1
                if self.resamples > _MAX_RESAMPLES:
                    raise UnsampleableResidue(
                        f"all lifts of {self.residue} hit exact singularities"
                    ) from None
                self._resample()
                return False
            self.current = nxt
            self.trail.append(
                (
                    reduce_rational(nxt[0], self.query.p),
                    reduce_rational(nxt[1], self.query.p),
                )
            )
        return True


# ---------------------------------------------------------------------------
# evaluation of the reduced composed map at a point (perturbation path)


class _RhsEvaluator:
    """Values of the reduced m-fold composed map at one residue point.

    m = 1 is evaluated directly; m >= 2 along perturbation lines, with all
    conclusive directions required to agree.  Direction disagreement or a
    fully degenerate pencil certifies that the composed map has no value at
    the point, which excludes that m from being a recovery step.
    """

    def __init__(self, query: AGRQuery, residue_point, n: int, rng: random.Random,
                 use_oracle: bool = False):
        self.query = query
        self.residue = residue_point
        self.n = n
        self.p = query.p
        self.use_oracle = use_oracle
        self.oracle_checks = 0
        n_dirs = min(max(3, query.lifts_per_residue), self.p - 1)
        self.lams = rng.sample(range(1, self.p), n_dirs)
        self.tracers: Optional[list] = None
        self.steps = None

    def _ensure_tracers(self):
        if self.tracers is None:
            self.steps = reduced_steps(
                self.query.family, self.n, self.query.m_max, self.p
            )
            self.tracers = [
                LineTracer(self.steps, self.residue, lam) for lam in self.lams
            ]

    def _perturbation(self, m: int):
        self._ensure_tracers()
        vals = [tr.value_at(m) for tr in self.tracers]
        conclusive = [v for v in vals if v is not DEGENERATE_LINE]
        if not conclusive:
            return UNDEFINED
        first = conclusive[0]
        if all(v == first for v in conclusive[1:]):
            return first
        # widen to every direction before giving up
        if len(self.lams) < self.p - 1:
            extra = [lam for lam in range(1, self.p) if lam not in self.lams]
            self.lams.extend(extra)
            self.tracers.extend(
                LineTracer(self.steps, self.residue, lam) for lam in extra
            )
            vals = [tr.value_at(m) for tr in self.tracers]
            conclusive = [v for v in vals if v is not DEGENERATE_LINE]
            first = conclusive[0]
            if all(v == first for v in conclusive[1:]):
                return first
        return INDETERMINATE

    def value(self, m: int):
        """The composed-map value: a pair, UNDEFINED, or INDETERMINATE."""
        if m == 1:
            direct = step_reduced(self.query.family, self.n, self.residue, self.p)
            result = UNDEFINED if direct is REDUCED_SINGULARITY else direct
        else:
            result = self._perturbation(m)
        if self.use_oracle and m <= _ORACLE_MAX_M:
            result = self._cross_check(m, result)
        return result

    def _cross_check(self, m: int, result):
        oracle = oracle_value(self.query.family, self.p, self.n, m, self.residue)
        self.oracle_checks += 1
        o_conclusive = all(isinstance(c, PFp) for c in oracle)
        r_conclusive = isinstance(result, tuple)
        if o_conclusive != r_conclusive or (
            o_conclusive and tuple(oracle) != tuple(result)
        ):
            raise CrossOracleMismatch(
                f"m={m} at ({self.residue[0]}, {self.residue[1]}),"
                f" n={self.n}, p={self.p}: perturbation {result!r} vs"
                f" oracle {oracle!r}"
            )
        return result


# ---------------------------------------------------------------------------
# the search


def find_recovery_step(
    query: AGRQuery,
    residue_point: tuple[PFp, PFp],
    n: int,
    *,
    use_oracle: bool = False,
    collect_trails: bool = False,
) -> RecoveryResult:
    """Minimal m <= m_max at which reduction and evolution commute.

    Samples lifts_per_residue exact lifts (residue + p * random rational of
    nonnegative valuation), walks their exact orbits, and compares the
    reductions against the reduced composed map evaluated independently at
    the residue point.  Recovery at m requires the composed-map value to be
    finite in both coordinates and equal to every lift's reduction.
    """
    px, py = residue_point
    if not (px.is_finite and py.is_finite):
        raise ValueError("recovery search requires finite residue coordinates")
    rng = _point_rng(query, residue_point, n)
    lifts = [
        _LiftOrbit(query, residue_point, n, rng)
        for _ in range(query.lifts_per_residue)
    ]
    rhs = _RhsEvaluator(query, residue_point, n, rng, use_oracle=use_oracle)

    while True:
        restart = False
        all_steps_agree = True
        outcome: Optional[tuple[int, tuple[PFp, PFp]]] = None
        for m in range(1, query.m_max + 1):
            for lift in lifts:
                if not lift.extend_to(m):
                    restart = True
                    break
            if restart:
                break
            vals = [lift.trail[m - 1] for lift in lifts]
            first = vals[0]
            if any(v != first for v in vals[1:]):
                all_steps_agree = False
                continue
            if not _is_finite_pair(first):
                continue
            value = rhs.value(m)
            if value is UNDEFINED or value is INDETERMINATE:
                continue
            if _is_finite_pair(value) and tuple(value) == tuple(first):
                outcome = (m, first)
                break
            # conclusive composed-map value disagreeing with the lifts: the
            # commuting diagram fails at this m
        if restart:
            continue
        break

    case = classify_case(query.family, residue_point, n, query.p)
    trails = [list(lift.trail) for lift in lifts] if collect_trails else None
    if outcome is not None:
        m_star, value = outcome
        return RecoveryResult(
            residue_point, n, m_star, value, True, case, trails
        )
    return RecoveryResult(
        residue_point, n, None, None, all_steps_agree, case, trails
    )


# ---------------------------------------------------------------------------
# proposition verification and failure detection


def verify_proposition(
    query: AGRQuery, *, oracle_stride: int = 0, progress=None
) -> PropositionReport:
    """Exhaustively check every residue point at every window index.

    Asserts minimal_m and the closed-form value for every matched
    singularity class, m = 1 at generic points, existence and lift
    independence at QRT singular points; every deviation is recorded as a
    violation in the report.
    """
    report_params = family_params(query.family)
    vr = validate_params(query.family, query.p)
    if not vr.ok:
        raise ValueError(
            f"invalid parameters for {family_name(query.family)} at p={query.p}: "
            + "; ".join(vr.violations)
        )
    report = PropositionReport(
        family=family_name(query.family),
        params=report_params,
        p=query.p,
        n_window=query.n_window,
        m_max=query.m_max,
        lifts_per_residue=query.lifts_per_residue,
        rng_seed=query.rng_seed,
        assumptions=list(vr.assumptions),
    )
    p = query.p
    counter = 0
    for n in query.n_values():
        for xr in range(p):
            for yr in range(p):
                residue = (PFp.finite(xr, p), PFp.finite(yr, p))
                if step_kind(query.family, n, residue, p) == "base":
                    # 0/0 indeterminacy point of the reduced step: the
                    # commuting diagram is not asserted there
                    report.base_points_skipped += 1
                    continue
                counter += 1
                use_oracle = bool(oracle_stride) and counter % oracle_stride == 0
                _check_point(query, report, residue, n, use_oracle)
                if progress is not None and counter % 500 == 0:
                    progress(counter)
    report.points_scanned = counter
    return report


def _record(report: PropositionReport, kind: str, residue, n: int, detail: str):
    report.violations.append(
        Violation(kind, (str(residue[0]), str(residue[1])), n, detail)
    )


def _check_point(query, report, residue, n, use_oracle):
    case = classify_case(query.family, residue, n, query.p)
    label = case.value if case is not None else "qrt_singular"
    report.case_counts[label] = report.case_counts.get(label, 0) + 1
    try:
        rr = find_recovery_step(query, residue, n, use_oracle=use_oracle)
    except UnsampleableResidue:
        _record(report, "unsampleable", residue, n, "all lifts hit exact singularities")
        return
    except CrossOracleMismatch as exc:
        _record(report, "cross_oracle_mismatch", residue, n, str(exc))
        return
    if use_oracle:
        report.oracle_checks += 1
    if rr.minimal_m is not None:
        report.m_histogram[rr.minimal_m] = (
            report.m_histogram.get(rr.minimal_m, 0) + 1
        )
    if case is None:
        # QRT singular point: existence and lift independence only
        if rr.minimal_m is None:
            kind = "not_recovered" if rr.lift_independent else "lift_dependent"
            _record(report, kind, residue, n, f"no recovery within m_max={query.m_max}")
        return
    expected_m = EXPECTED_M[case]
    if case is CaseID.GENERIC:
        if rr.minimal_m != 1:
            _record(
                report,
                "wrong_m",
                residue,
                n,
                f"generic point recovered at m={rr.minimal_m}, expected 1",
            )
        return
    try:
        expected_value, _ = closed_form_value(case, residue, query.family, n, query.p)
    except ZeroDenominatorInFormula as exc:
        _record(report, "formula_degenerate", residue, n, str(exc))
        return
    if rr.minimal_m is None:
        kind = "not_recovered" if rr.lift_independent else "lift_dependent"
        _record(
            report,
            kind,
            residue,
            n,
            f"case {case.value}: no recovery within m_max={query.m_max}",
        )
        return
    if rr.minimal_m != expected_m:
        _record(
            report,
            "wrong_m",
            residue,
            n,
            f"case {case.value}: m={rr.minimal_m}, expected {expected_m}",
        )
    if tuple(rr.recovered_value) != tuple(expected_value):
        _record(
            report,
            "value_mismatch",
            residue,
            n,
            f"case {case.value}: recovered {rr.recovered_value}, closed form"
            f" {expected_value}",
        )


def detect_agr_failure(
    query: AGRQuery, *, stop_after: Optional[int] = None
) -> list[FailureWitness]:
    """Residue points at which no m <= m_max recovers.

    A witness is lift-dependent when different lifts of the residue reduce
    to different orbit values (no single composed-map value can match), and
    not-recovered otherwise.  For families with almost good reduction and
    valid parameters the list is empty.
    """
    witnesses: list[FailureWitness] = []
    p = query.p
    for n in query.n_values():
        for xr in range(p):
            for yr in range(p):
                residue = (PFp.finite(xr, p), PFp.finite(yr, p))
                if step_kind(query.family, n, residue, p) == "base":
                    continue
                try:
                    rr = find_recovery_step(query, residue, n, collect_trails=True)
                except UnsampleableResidue:
                    continue
                if rr.minimal_m is None:
                    kind = (
                        "not_recovered" if rr.lift_independent else "lift_dependent"
                    )
                    witnesses.append(
                        FailureWitness(residue, n, kind, query.m_max, rr.lift_trails)
                    )
                    if stop_after and len(witnesses) >= stop_after:
                        return witnesses
    return witnesses
