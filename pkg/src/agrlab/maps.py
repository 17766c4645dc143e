"""The four plane map families and their step evaluation.

Every family is a coupled system (x, y) -> (f(x, y), x):

  QRT             x' = (a x + 1) / (x**gamma * y)
  q-Painleve III  x' = a b (x - c q**n)(x - d q**n) / (y (x - a)(x - b))
  q-Painleve IV   x' = (tau**2 (a x**2 + b x + a) + (x y - 1)(x + tau))
                       / (x (x y - 1)(x + tau)),   tau = q**n * tau0
  Hietarinta-Viallet  x' = x + a / x**2 - y

Steps are available in exact rational arithmetic, over the reduced plane
F_p x F_p, and symbolically over function fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from gmpy2 import mpq

from .exactnum import PFp, check_prime, to_rational, valuation
from .polyfield import GF, QQ, MultiPoly, RationalFunction, _Sentinel

__all__ = [
    "QRTMap",
    "QPainleve3",
    "QPainleve4",
    "HietarintaViallet",
    "MapFamily",
    "ExactSingularity",
    "REDUCED_SINGULARITY",
    "ValidationReport",
    "family_from_params",
    "family_name",
    "family_params",
    "is_autonomous",
    "validate_params",
    "step_exact",
    "step_reduced",
    "step_kind",
    "step_symbolic",
    "step_pair_rf",
    "reduced_steps",
    "in_domain",
]


class ExactSingularity(ArithmeticError):
    """The exact denominator vanished: the orbit leaves the affine plane."""


#: step_reduced outcome at residue points where the reduced map blows up.
REDUCED_SINGULARITY = _Sentinel("ReducedSingularity")


@dataclass(frozen=True)
class QRTMap:
    a: mpq
    gamma: int


@dataclass(frozen=True)
class QPainleve3:
    a: mpq
    b: mpq
    c: mpq
    d: mpq
    q: mpq


@dataclass(frozen=True)
class QPainleve4:
    a: mpq
    b: mpq
    q: mpq
    tau0: mpq


@dataclass(frozen=True)
class HietarintaViallet:
    a: mpq


MapFamily = Union[QRTMap, QPainleve3, QPainleve4, HietarintaViallet]

_NAMES = {
    QRTMap: "qrt",
    QPainleve3: "qp3",
    QPainleve4: "qp4",
    HietarintaViallet: "hv",
}


def family_name(family: MapFamily) -> str:
    return _NAMES[type(family)]


def is_autonomous(family: MapFamily) -> bool:
    return isinstance(family, (QRTMap, HietarintaViallet))


def family_params(family: MapFamily) -> dict[str, str]:
    """Parameters as canonical rational strings (gamma stays an int)."""
    if isinstance(family, QRTMap):
        return {"a": str(family.a), "gamma": str(family.gamma)}
    if isinstance(family, QPainleve3):
        return {k: str(getattr(family, k)) for k in "abcdq"}
    if isinstance(family, QPainleve4):
        return {k: str(getattr(family, k)) for k in ("a", "b", "q", "tau0")}
    return {"a": str(family.a)}


def family_from_params(name: str, params: dict) -> MapFamily:
    """Build a family from a configuration mapping of rational strings.

    qp4 accepts either the native (a, b, q, tau0) parameters or the
    five-parameter (a, b, c, d, q) input form, which is converted via
    tau0 = d/c, a -> a*c/d**2, b -> b*c/d**2.
    """
    name = name.lower()
    params = dict(params)

    def take(key) -> mpq:
        if key not in params:
            raise ValueError(f"{name}: missing parameter {key!r}")
        return to_rational(params.pop(key))

    if name == "qrt":
        a = take("a")
        gamma_raw = params.pop("gamma", None)
        if gamma_raw is None:
            raise ValueError("qrt: missing parameter 'gamma'")
        gamma = int(str(gamma_raw), 10)
        if gamma < 0:
            raise ValueError("qrt: gamma must be a nonnegative integer")
        fam: MapFamily = QRTMap(a, gamma)
    elif name == "qp3":
        fam = QPainleve3(take("a"), take("b"), take("c"), take("d"), take("q"))
    elif name == "qp4":
        if "tau0" in params:
            fam = QPainleve4(take("a"), take("b"), take("q"), take("tau0"))
        else:
            a, b, c, d, q = take("a"), take("b"), take("c"), take("d"), take("q")
            if c == 0 or d == 0:
                raise ValueError("qp4: c and d must be nonzero")
            fam = QPainleve4(a * c / d**2, b * c / d**2, q, d / c)
    elif name == "hv":
        fam = HietarintaViallet(take("a"))
    else:
        raise ValueError(f"unknown family {name!r}")
    if params:
        raise ValueError(f"{name}: unknown parameters {sorted(params)}")
    return fam


# ---------------------------------------------------------------------------
# parameter validation


@dataclass
class ValidationReport:
    family: str
    p: int
    violations: list[str]
    assumptions: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def _unit_checks(family: MapFamily, p: int, names, out: list[str]) -> None:
    for nm in names:
        v = valuation(getattr(family, nm), p)
        if v != 0:
            out.append(f"valuation of {nm} at {p} is {v}, expected 0")


def validate_params(family: MapFamily, p: int) -> ValidationReport:
    """Check every parameter condition the family requires at the prime p."""
    check_prime(p)
    bad: list[str] = []
    notes: list[str] = []
    if isinstance(family, QRTMap):
        if family.gamma < 0:
            bad.append("gamma must be nonnegative")
        v = valuation(family.a, p)
        if v != 0 and v < 0:
            bad.append(f"valuation of a at {p} is {v}, expected >= 0")
    elif isinstance(family, QPainleve3):
        _unit_checks(family, p, "abcd", bad)
        vq = valuation(family.q, p)
        if vq != 0:
            bad.append(f"valuation of q at {p} is {vq}, expected 0")
        notes.append(
            "q is required to be a p-adic unit; this strengthens the stated"
            " unit-norm hypotheses on a, b, c, d"
        )
        vals = [family.a, family.b, family.c, family.d, family.q]
        if len(set(vals)) != 5:
            bad.append("parameters a, b, c, d, q must be pairwise distinct")
        if bad:
            return ValidationReport(family_name(family), p, bad, notes)
        a, b, c, d, q = (_residue(x, p) for x in vals)
        if a == b:
            bad.append("a and b coincide mod p")
        if (a + b) % p == (c + d) * pow(q, 3, p) % p:
            bad.append("a + b is congruent to (c + d) q^3 mod p")
    elif isinstance(family, QPainleve4):
        _unit_checks(family, p, ("a", "b", "q", "tau0"), bad)
        if bad:
            return ValidationReport(family_name(family), p, bad, notes)
        a = _residue(family.a, p)
        q = _residue(family.q, p)
        t0 = _residue(family.tau0, p)
        if a * pow(q, 2, p) * t0 % p == 1:
            bad.append("a q^2 tau0 is congruent to 1 mod p")
        if a * pow(q, 4, p) * t0 % p == 1:
            bad.append("a q^4 tau0 is congruent to 1 mod p")
    elif isinstance(family, HietarintaViallet):
        _unit_checks(family, p, "a", bad)
    else:
        raise TypeError(f"not a map family: {family!r}")
    return ValidationReport(family_name(family), p, bad, notes)


def _residue(x: mpq, p: int) -> int:
    den = int(x.denominator)
    if den % p == 0:
        raise ZeroDivisionError(f"{x} has negative valuation at {p}")
    return int(x.numerator) * pow(den, -1, p) % p


# ---------------------------------------------------------------------------
# exact stepping over Q


def _q_power(q: mpq, n: int) -> mpq:
    if n >= 0:
        return q**n
    return 1 / q ** (-n)


def step_exact(family: MapFamily, n: int, pt: tuple) -> tuple[mpq, mpq]:
    """One exact step; raises ExactSingularity on a vanishing denominator."""
    x = to_rational(pt[0])
    y = to_rational(pt[1])
    if isinstance(family, QRTMap):
        den = x**family.gamma * y
        if den == 0:
            raise ExactSingularity(f"x^gamma * y = 0 at {pt}")
        return ((family.a * x + 1) / den, x)
    if isinstance(family, QPainleve3):
        qn = _q_power(family.q, n)
        den = y * (x - family.a) * (x - family.b)
        if den == 0:
            raise ExactSingularity(f"y (x - a)(x - b) = 0 at {pt}")
        num = family.a * family.b * (x - family.c * qn) * (x - family.d * qn)
        return (num / den, x)
    if isinstance(family, QPainleve4):
        tau = _q_power(family.q, n) * family.tau0
        w = x * y - 1
        den = x * w * (x + tau)
        if den == 0:
            raise ExactSingularity(f"x (x y - 1)(x + tau) = 0 at {pt}")
        num = tau**2 * (family.a * x**2 + family.b * x + family.a) + w * (x + tau)
        return (num / den, x)
    if isinstance(family, HietarintaViallet):
        if x == 0:
            raise ExactSingularity(f"x = 0 at {pt}")
        return (x + family.a / x**2 - y, x)
    raise TypeError(f"not a map family: {family!r}")


# ---------------------------------------------------------------------------
# reduced stepping over F_p


@lru_cache(maxsize=None)
def _reduced_params(family: MapFamily, p: int):
    if isinstance(family, QRTMap):
        x = family.a
        if int(x.denominator) % p == 0:
            raise ZeroDivisionError(f"a has negative valuation at {p}")
        return (_residue(family.a, p),)
    if isinstance(family, QPainleve3):
        return tuple(_residue(getattr(family, k), p) for k in "abcdq")
    if isinstance(family, QPainleve4):
        return tuple(
            _residue(getattr(family, k), p) for k in ("a", "b", "q", "tau0")
        )
    return (_residue(family.a, p),)


def step_reduced(family: MapFamily, n: int, pt: tuple[PFp, PFp], p: int):
    """One step of the reduced map at a finite residue point.

    The reduced map is the canonical reduction of the step (coefficients
    mod p, common factors re-cancelled over F_p).  Returns the image pair,
    or REDUCED_SINGULARITY when the x-image is not a finite residue (a
    pole or a 0/0 base point of the reduced map).
    """
    px, py = pt
    if not (px.is_finite and py.is_finite):
        raise ValueError("step_reduced expects finite residue coordinates")
    if px.p != p or py.p != p:
        raise ValueError("point prime does not match p")
    f, _ = step_pair_rf(family, n, p)
    new_x = f.num.evaluate(px.r, py.r)
    den = f.den.evaluate(px.r, py.r)
    if den == 0:
        return REDUCED_SINGULARITY
    return (PFp.finite(new_x * pow(den, -1, p) % p, p), PFp.finite(px.r, p))


def step_kind(family: MapFamily, n: int, pt: tuple[PFp, PFp], p: int) -> str:
    """Classify a finite residue point for the canonical reduced step.

    "regular": the image is finite.  "pole": the x-image denominator
    vanishes but not the numerator (the image leaves the affine chart;
    these are the confined singular entries).  "base": numerator and
    denominator both vanish, a 0/0 indeterminacy point of the reduced map
    where the lifted dynamics keeps a memory of the lift and almost good
    reduction is not asserted.
    """
    px, py = pt
    if not (px.is_finite and py.is_finite):
        raise ValueError("step_kind expects finite residue coordinates")
    f, _ = step_pair_rf(family, n, p)
    den = f.den.evaluate(px.r, py.r)
    if den != 0:
        return "regular"
    num = f.num.evaluate(px.r, py.r)
    return "pole" if num != 0 else "base"


# ---------------------------------------------------------------------------
# symbolic stepping and step maps as rational functions


def _params_in_field(family: MapFamily, n: int, field) -> dict:
    """Family coefficients for step index n, coerced into the field."""
    if field is QQ or field == QQ:
        conv = lambda v: v  # noqa: E731
    else:
        conv = lambda v: field.coerce(v)  # noqa: E731
    out = {}
    if isinstance(family, QRTMap):
        out["a"] = conv(family.a)
        out["gamma"] = family.gamma
    elif isinstance(family, QPainleve3):
        qn = _q_power(family.q, n)
        out["a"] = conv(family.a)
        out["b"] = conv(family.b)
        out["cqn"] = conv(family.c * qn)
        out["dqn"] = conv(family.d * qn)
    elif isinstance(family, QPainleve4):
        out["a"] = conv(family.a)
        out["b"] = conv(family.b)
        out["tau"] = conv(_q_power(family.q, n) * family.tau0)
    elif isinstance(family, HietarintaViallet):
        out["a"] = conv(family.a)
    else:
        raise TypeError(f"not a map family: {family!r}")
    return out


def step_symbolic(family: MapFamily, n: int, pt: tuple):
    """Apply one step to coordinates living in a function field.

    The coordinates must support field arithmetic (RationalFunction over
    Q(x, y) or F_p(x, y), UniRF over F_p(t)); division is exact with gcd
    cancellation, and a vanishing denominator raises ZeroDivisionError
    (DegenerateComposition at the rf_compose level).
    """
    x, y = pt
    cls = type(x)
    field = x.field
    par = _params_in_field(family, n, field)
    const = lambda v: cls.const(v, field)  # noqa: E731
    if isinstance(family, QRTMap):
        new_x = (const(par["a"]) * x + 1) / (x ** par["gamma"] * y)
    elif isinstance(family, QPainleve3):
        a, b = const(par["a"]), const(par["b"])
        num = a * b * (x - const(par["cqn"])) * (x - const(par["dqn"]))
        new_x = num / (y * (x - a) * (x - b))
    elif isinstance(family, QPainleve4):
        a, b, tau = const(par["a"]), const(par["b"]), const(par["tau"])
        w = x * y - 1
        num = tau * tau * (a * x * x + b * x + a) + w * (x + tau)
        new_x = num / (x * w * (x + tau))
    elif isinstance(family, HietarintaViallet):
        new_x = x + const(par["a"]) / (x * x) - y
    else:
        raise TypeError(f"not a map family: {family!r}")
    return (new_x, x)


@lru_cache(maxsize=None)
def step_pair_rf(family: MapFamily, n: int, p: int | None):
    """The step map as a pair of canonical rational functions.

    p = None builds the exact map over Q; otherwise coefficients are the
    residues mod p (parameters must have nonnegative valuation).
    """
    field = QQ if p is None else GF(p)
    x = RationalFunction.var_x(field)
    y = RationalFunction.var_y(field)
    return step_symbolic(family, n, (x, y))


def reduced_steps(family: MapFamily, n: int, m: int, p: int) -> list:
    """Reduced step maps for indices n, n+1, ..., n+m-1."""
    return [step_pair_rf(family, n + k, p) for k in range(m)]


# ---------------------------------------------------------------------------
# domain predicates


def _domain_exact(family: MapFamily, n: int, x: mpq, y: mpq) -> bool:
    if isinstance(family, QRTMap):
        if family.gamma == 0:
            return y != 0
        return x != 0 and y != 0
    if isinstance(family, QPainleve3):
        return x != family.a and x != family.b and y != 0
    if isinstance(family, QPainleve4):
        tau = _q_power(family.q, n) * family.tau0
        return x != 0 and x * y != 1 and x != -tau
    if isinstance(family, HietarintaViallet):
        return x != 0
    raise TypeError(f"not a map family: {family!r}")


def _domain_residue(family: MapFamily, n: int, x: int, y: int, p: int) -> bool:
    if isinstance(family, QRTMap):
        if family.gamma == 0:
            return y != 0
        return x != 0 and y != 0
    if isinstance(family, QPainleve3):
        a, b, c, d, q = _reduced_params(family, p)
        return x != a and x != b and y != 0
    if isinstance(family, QPainleve4):
        a, b, q, t0 = _reduced_params(family, p)
        tau = pow(q, n, p) * t0 % p
        return x != 0 and x * y % p != 1 and x != -tau % p
    if isinstance(family, HietarintaViallet):
        return x != 0
    raise TypeError(f"not a map family: {family!r}")


def in_domain(family: MapFamily, n: int, pt: tuple, p: int) -> bool:
    """Domain predicate at step index n.

    For rational points the conditions are exact (plus Z_p membership of
    both coordinates); for residue points they are tested mod p.  Residue
    points failing the predicate are exactly the singular points of the
    reduced step.
    """
    x, y = pt
    if isinstance(x, PFp):
        if not (x.is_finite and y.is_finite):
            return False
        return _domain_residue(family, n, x.r, y.r, p)
    xr, yr = to_rational(x), to_rational(y)
    if valuation(xr, p) < 0 or valuation(yr, p) < 0:
        return False
    return _domain_exact(family, n, xr, yr)
