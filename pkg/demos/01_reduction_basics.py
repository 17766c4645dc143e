"""Valuations and reduction of exact rationals to the projective line.

Every rational x factors as p**v * u/w with u, w coprime to p.  The
exponent v is the p-adic valuation; nonnegative valuation means x reduces
to a residue of F_p, negative valuation sends x to the point at infinity
of P1(Fp).
"""

from gmpy2 import mpq

from agrlab import PFp, reduce_rational, valuation

p = 7

print(f"reduction to P1(F_{p})")
print("=" * 40)
for x in (mpq(10, 3), mpq(1, 7), mpq(98, 5), mpq(3, 49), mpq(0)):
    v = valuation(x, p)
    r = reduce_rational(x, p)
    print(f"  x = {str(x):>8}   v_{p}(x) = {str(v):>4}   x~ = {r}")

print()
print("reduction is a ring homomorphism on the subring v_p >= 0:")
x, y = mpq(10, 3), mpq(24, 5)
rx, ry = reduce_rational(x, p), reduce_rational(y, p)
print(f"  x~ = {rx}, y~ = {ry}")
print(f"  (x+y)~ = {reduce_rational(x + y, p)}  vs  x~+y~ = {PFp.finite(rx.r + ry.r, p)}")
print(f"  (x*y)~ = {reduce_rational(x * y, p)}  vs  x~*y~ = {PFp.finite(rx.r * ry.r, p)}")

print()
print("points below the valuation-zero floor escape to infinity:")
for k in range(-2, 3):
    x = mpq(3) * mpq(p) ** k
    print(f"  3 * {p}^{k:>2} reduces to {reduce_rational(x, p)}")
