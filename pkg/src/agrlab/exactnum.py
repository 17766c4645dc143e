"""Exact rationals, p-adic valuation, prime fields and the projective line.

Rationals are gmpy2.mpq values (arbitrary precision, always in lowest
terms with positive denominator).  The reduction map sends a rational of
nonnegative p-adic valuation to its residue in F_p and everything else to
the point at infinity of P1(Fp).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import gmpy2
from gmpy2 import mpq, mpz

#: Valuation of zero; (+inf) compares above every integer and absorbs sums.
PLUS_INFINITY = math.inf

#: Anything accepted where an exact rational is expected.
RationalLike = Union[int, str, Fraction, mpq]

_MAX_PRIME = 2**63


def to_rational(value: RationalLike) -> mpq:
    """Coerce ints, "num/den" strings, Fractions or mpq values to mpq.

    Floats are rejected: every number in the system must be exact.
    """
    if isinstance(value, float):
        raise TypeError("floating point values are not exact rationals")
    if isinstance(value, str):
        parts = value.split("/")
        if len(parts) == 1:
            num, den = parts[0].strip(), "1"
        elif len(parts) == 2:
            num, den = parts[0].strip(), parts[1].strip()
        else:
            raise ValueError(f"malformed rational {value!r}")
        try:
            n = int(num, 10)
            d = int(den, 10)
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
        if d == 0:
            raise ValueError(f"zero denominator in rational {value!r}")
        return mpq(n, d)
    return mpq(value)


def rational_str(x: mpq) -> str:
    """Canonical "num/den" (or "num" for integers) string form."""
    return str(mpq(x))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test, valid for n < 2**64."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_prime(p: int) -> int:
    """Validate a modulus: an odd prime below 2**63."""
    if not isinstance(p, int) or isinstance(p, bool):
        raise ValueError(f"prime must be an integer, got {p!r}")
    if p == 2:
        raise ValueError("p = 2 is not supported; use an odd prime")
    if p >= _MAX_PRIME:
        raise ValueError(f"prime {p} exceeds the 2**63 limit")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return p


def valuation(x: RationalLike, p: int):
    """p-adic valuation of a rational: the exponent of p in x.

    Returns an int, or PLUS_INFINITY for x = 0.
    """
    check_prime(p)
    q = to_rational(x)
    num = q.numerator
    if num == 0:
        return PLUS_INFINITY
    pz = mpz(p)
    _, vn = gmpy2.remove(num, pz)
    _, vd = gmpy2.remove(q.denominator, pz)
    return vn - vd


def padic_norm(x: RationalLike, p: int) -> Fraction:
    """p-adic norm p**(-v_p(x)); zero has norm 0."""
    v = valuation(x, p)
    if v == PLUS_INFINITY:
        return Fraction(0)
    return Fraction(p) ** (-v)


class FpElem:
    """An element of the prime field F_p, stored as a residue in [0, p)."""

    __slots__ = ("p", "residue")

    def __init__(self, residue: int, p: int):
        self.p = p
        self.residue = int(residue) % p

    @classmethod
    def checked(cls, residue: int, p: int) -> "FpElem":
        check_prime(p)
        return cls(residue, p)

    def _coerce(self, other) -> "FpElem":
        if isinstance(other, FpElem):
            if other.p != self.p:
                raise ValueError(f"mixed primes {self.p} and {other.p}")
            return other
        if isinstance(other, int):
            return FpElem(other, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElem(self.residue + o.residue, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElem(self.residue - o.residue, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElem(o.residue - self.residue, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElem(self.residue * o.residue, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inv()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inv()

    def __neg__(self):
        return FpElem(-self.residue, self.p)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inv() ** (-exponent)
        return FpElem(pow(self.residue, exponent, self.p), self.p)

    def inv(self) -> "FpElem":
        if self.residue == 0:
            raise ZeroDivisionError(f"inverse of zero in F_{self.p}")
        return FpElem(pow(self.residue, -1, self.p), self.p)

    def is_zero(self) -> bool:
        return self.residue == 0

    def __eq__(self, other):
        if isinstance(other, FpElem):
            return self.p == other.p and self.residue == other.residue
        if isinstance(other, int):
            return self.residue == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.residue))

    def __repr__(self):
        return f"FpElem({self.residue} mod {self.p})"

    def __str__(self):
        return str(self.residue)


def fp_arith(a: FpElem, b: FpElem, op: str) -> FpElem:
    """Field arithmetic in F_p; op is one of '+', '-', '*', '/'."""
    if not isinstance(a, FpElem) or not isinstance(b, FpElem):
        raise ValueError("fp_arith operates on FpElem values")
    if a.p != b.p:
        raise ValueError(f"mixed primes {a.p} and {b.p}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


class PFp:
    """A point of the projective line over F_p: a finite residue or infinity."""

    __slots__ = ("p", "r")

    def __init__(self, p: int, r):
        # r is an int residue in [0, p) or None for the point at infinity
        self.p = p
        self.r = r

    @classmethod
    def finite(cls, residue, p: int) -> "PFp":
        if isinstance(residue, FpElem):
            if residue.p != p:
                raise ValueError(f"mixed primes {residue.p} and {p}")
            return cls(p, residue.residue)
        return cls(p, int(residue) % p)

    @classmethod
    def infinity(cls, p: int) -> "PFp":
        return cls(p, None)

    @property
    def is_finite(self) -> bool:
        return self.r is not None

    @property
    def residue(self) -> FpElem:
        if self.r is None:
            raise ValueError("the point at infinity has no residue")
        return FpElem(self.r, self.p)

    def __eq__(self, other):
        if isinstance(other, PFp):
            return self.p == other.p and self.r == other.r
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.r))

    def __repr__(self):
        body = "inf" if self.r is None else self.r
        return f"PFp({body} mod {self.p})"

    def __str__(self):
        return "inf" if self.r is None else str(self.r)


def reduce_rational(x: RationalLike, p: int) -> PFp:
    """Reduce a rational to P1(Fp).

    Nonnegative valuation maps to the residue of num * den**-1; negative
    valuation maps to the point at infinity.
    """
    check_prime(p)
    q = to_rational(x)
    num = int(q.numerator)
    den = int(q.denominator)
    if den % p == 0:
        # lowest terms: p cannot divide both numerator and denominator
        return PFp.infinity(p)
    return PFp.finite(num * pow(den, -1, p) % p, p)


def reduce_unit(x: mpq, p: int) -> int:
    """Residue of a rational already known to have valuation >= 0.

    Skips the primality check; internal fast path for coefficient maps.
    """
    num = int(x.numerator)
    den = int(x.denominator)
    return num * pow(den, -1, p) % p


def reduce_point(pt, p: int):
    """Reduce a pair of rationals coordinatewise to P1(Fp) x P1(Fp)."""
    x, y = pt
    return (reduce_rational(x, p), reduce_rational(y, p))
