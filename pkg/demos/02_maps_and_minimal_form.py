"""Step maps as rational functions: minimal form and reduction mod p.

A plane map reduces mod p by scaling numerator and denominator jointly by
a power of p until every coefficient is a p-adic integer and at least one
is a unit ("minimal form"), then reducing coefficients and re-cancelling
over F_p.  A map whose reduced denominator vanishes identically has no
reduction at all.
"""

from gmpy2 import mpq

from agrlab import (
    QQ,
    UNDEFINED,
    MultiPoly,
    RationalFunction,
    family_from_params,
    minimal_form,
    reduce_rf,
)
from agrlab.maps import step_pair_rf

qp3 = family_from_params("qp3", {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"})
f, g = step_pair_rf(qp3, 0, None)
print("q-Painleve III step over Q:")
print(f"  x' = {f}")
print(f"  y' = {g}")

print()
print("reduced mod 11 (coefficients to residues, common factors cancelled):")
f11, g11 = step_pair_rf(qp3, 0, 11)
print(f"  x' = {f11}")

print()
print("minimal form scales away denominators of coefficients:")
h = RationalFunction.make(
    MultiPoly.from_terms([(1, 0, 1), (0, 0, mpq(1, 5))], QQ),
    MultiPoly.from_terms([(0, 1, 1)], QQ),
)
mf, witness = minimal_form(h, 5)
print(f"  f = {h}")
print(f"  minimal form at p=5: ({mf.num}) / ({mf.den})")
print(f"  scaling exponent {witness.power_of_p},"
      f" unit coefficient at {witness.unit_coefficient_index}")
print(f"  reduced mod 5: {reduce_rf(h, 5)}")

print()
print("a map can fail to reduce: (x + 7) / (7 y) at p = 7")
bad = RationalFunction.make(
    MultiPoly.from_terms([(1, 0, 1), (0, 0, 7)], QQ),
    MultiPoly.from_terms([(0, 1, 7)], QQ),
)
outcome = reduce_rf(bad, 7)
print(f"  reduce_rf -> {outcome} (is UNDEFINED: {outcome is UNDEFINED})")
